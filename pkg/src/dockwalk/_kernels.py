"""Compiled numeric core: tree kinematics, mass matrix, bias forces, RK4.

Every kernel works on the packed array form of the robot (see
RobotModel.packed) and the flat state vector

    [t_b(3), quat(4, w first), v_b(6), q(zeta*n), dq(zeta*n)]

with v_b = [dt_b, omega] in the inertial frame. The mass matrix and bias are
assembled from per-body Jacobians, which keeps each quantity checkable
against per-body summation oracles; at ~30 degrees of freedom the O(bodies
x cols^2) cost is negligible once compiled.
"""

import numpy as np
from numba import njit

HDR = 13  # floats before the joint block: position 3 + quaternion 4 + twist 6


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _rot_axis_angle(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    x, y, z = axis[0], axis[1], axis[2]
    R = np.empty((3, 3))
    ic = 1.0 - c
    R[0, 0] = c + x * x * ic
    R[0, 1] = x * y * ic - z * s
    R[0, 2] = x * z * ic + y * s
    R[1, 0] = y * x * ic + z * s
    R[1, 1] = c + y * y * ic
    R[1, 2] = y * z * ic - x * s
    R[2, 0] = z * x * ic - y * s
    R[2, 1] = z * y * ic + x * s
    R[2, 2] = c + z * z * ic
    return R


@njit(cache=True)
def _quat_to_rot(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[0, 1] = 2.0 * (x * y - z * w)
    R[0, 2] = 2.0 * (x * z + y * w)
    R[1, 0] = 2.0 * (x * y + z * w)
    R[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[1, 2] = 2.0 * (y * z - x * w)
    R[2, 0] = 2.0 * (x * z - y * w)
    R[2, 1] = 2.0 * (y * z + x * w)
    R[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


@njit(cache=True)
def _quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True)
def _quat_from_rotvec(v):
    angle = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    out = np.empty(4)
    if angle < 1e-14:
        out[0] = 1.0
        out[1] = 0.5 * v[0]
        out[2] = 0.5 * v[1]
        out[3] = 0.5 * v[2]
        nrm = np.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
        return out / nrm
    half = 0.5 * angle
    s = np.sin(half) / angle
    out[0] = np.cos(half)
    out[1] = s * v[0]
    out[2] = s * v[1]
    out[3] = s * v[2]
    return out


@njit(cache=True)
def fk_chain(mount_p, mount_R, axis, tr, lcom, ee_off, base_p, base_R, q):
    """World joint origins, joint axes, link rotations, link COMs, EE poses."""
    z = mount_p.shape[0]
    n = axis.shape[1]
    o = np.empty((z, n, 3))
    s = np.empty((z, n, 3))
    Rw = np.empty((z, n, 3, 3))
    com = np.empty((z, n, 3))
    ee_p = np.empty((z, 3))
    ee_R = np.empty((z, 3, 3))
    for i in range(z):
        R = base_R @ mount_R[i]
        pos = base_p + base_R @ mount_p[i]
        for j in range(n):
            pos = pos + R @ tr[i, j]
            sj = R @ axis[i, j]
            R = R @ _rot_axis_angle(axis[i, j], q[i, j])
            o[i, j] = pos
            s[i, j] = sj
            Rw[i, j] = R
            com[i, j] = pos + R @ lcom[i, j]
        ee_p[i] = pos + R @ ee_off[i]
        ee_R[i] = R
    return o, s, Rw, com, ee_p, ee_R


@njit(cache=True)
def mass_and_bias(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                  base_p, base_R, vb, q, dq):
    """Joint-space inertia matrix and velocity bias for the full system.

    Generalized coordinates: [v_b; dq] with v_b at the base origin in world
    axes. Bias c satisfies M vdot + c = generalized forces (zero gravity).
    """
    z = mount_p.shape[0]
    n = axis.shape[1]
    nd = 6 + z * n
    M = np.zeros((nd, nd))
    c = np.zeros(nd)
    tb = base_p
    vlin = vb[0:3].copy()
    w0 = vb[3:6].copy()

    # base body (COM at the base origin)
    Iwb = base_R @ bI @ base_R.T
    for a in range(3):
        M[a, a] += bm
    M[3:6, 3:6] += Iwb
    nb = _cross(w0, Iwb @ w0)
    c[3:6] += nb

    Jv = np.empty((3, 12))
    Jw = np.empty((3, 12))
    cols = np.empty(12, np.int64)
    for i in range(z):
        R = base_R @ mount_R[i]
        pos = tb + base_R @ mount_p[i]
        vo = vlin + _cross(w0, pos - tb)
        ao = _cross(w0, _cross(w0, pos - tb))
        wp = w0.copy()
        dwp = np.zeros(3)
        so = np.empty((n, 3))
        oo = np.empty((n, 3))
        for j in range(n):
            r = R @ tr[i, j]
            pos = pos + r
            vo = vo + _cross(wp, r)
            ao = ao + _cross(dwp, r) + _cross(wp, _cross(wp, r))
            sj = R @ axis[i, j]
            R = R @ _rot_axis_angle(axis[i, j], q[i, j])
            so[j] = sj
            oo[j] = pos
            wc = wp + sj * dq[i, j]
            dwc = dwp + _cross(wp, sj) * dq[i, j]
            rc = R @ lcom[i, j]
            x = pos + rc
            vcom = vo + _cross(wc, rc)
            acom = ao + _cross(dwc, rc) + _cross(wc, _cross(wc, rc))
            Iw = R @ lin[i, j] @ R.T
            fb = lmass[i, j] * acom
            nbk = Iw @ dwc + _cross(wc, Iw @ wc)

            nc = 6 + j + 1
            rel = x - tb
            for a in range(3):
                for b in range(3):
                    Jv[a, b] = 1.0 if a == b else 0.0
                    Jw[a, b] = 0.0
            # d/d omega columns: Jv = -skew(rel), Jw = I
            Jv[0, 3] = 0.0
            Jv[0, 4] = rel[2]
            Jv[0, 5] = -rel[1]
            Jv[1, 3] = -rel[2]
            Jv[1, 4] = 0.0
            Jv[1, 5] = rel[0]
            Jv[2, 3] = rel[1]
            Jv[2, 4] = -rel[0]
            Jv[2, 5] = 0.0
            for a in range(3):
                for b in range(3):
                    Jw[a, 3 + b] = 1.0 if a == b else 0.0
            for m in range(j + 1):
                col = _cross(so[m], x - oo[m])
                for a in range(3):
                    Jv[a, 6 + m] = col[a]
                    Jw[a, 6 + m] = so[m][a]
            for m in range(6):
                cols[m] = m
            for m in range(j + 1):
                cols[6 + m] = 6 + i * n + m

            mk = lmass[i, j]
            for a in range(nc):
                ca = cols[a]
                IJw_a = Iw @ Jw[:, a].copy()
                for b in range(a, nc):
                    cb = cols[b]
                    val = mk * (Jv[0, a] * Jv[0, b] + Jv[1, a] * Jv[1, b] + Jv[2, a] * Jv[2, b])
                    val += IJw_a[0] * Jw[0, b] + IJw_a[1] * Jw[1, b] + IJw_a[2] * Jw[2, b]
                    M[ca, cb] += val
                    if ca != cb:
                        M[cb, ca] += val
                c[ca] += (Jv[0, a] * fb[0] + Jv[1, a] * fb[1] + Jv[2, a] * fb[2]
                          + Jw[0, a] * nbk[0] + Jw[1, a] * nbk[1] + Jw[2, a] * nbk[2])
            wp = wc
            dwp = dwc
    return M, c


@njit(cache=True)
def body_momenta(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                 base_p, base_R, vb, q, dq):
    """Per-body (m v_com, momentum about the base origin) summed over bodies."""
    z = mount_p.shape[0]
    n = axis.shape[1]
    tb = base_p
    vlin = vb[0:3].copy()
    w0 = vb[3:6].copy()
    lin_mom = bm * vlin
    ang_mom = (base_R @ bI @ base_R.T) @ w0
    for i in range(z):
        R = base_R @ mount_R[i]
        pos = tb + base_R @ mount_p[i]
        vo = vlin + _cross(w0, pos - tb)
        wp = w0.copy()
        for j in range(n):
            r = R @ tr[i, j]
            pos = pos + r
            vo = vo + _cross(wp, r)
            sj = R @ axis[i, j]
            R = R @ _rot_axis_angle(axis[i, j], q[i, j])
            wc = wp + sj * dq[i, j]
            rc = R @ lcom[i, j]
            x = pos + rc
            vcom = vo + _cross(wc, rc)
            Iw = R @ lin[i, j] @ R.T
            mv = lmass[i, j] * vcom
            lin_mom = lin_mom + mv
            ang_mom = ang_mom + _cross(x - tb, mv) + Iw @ wc
            wp = wc
    return lin_mom, ang_mom


@njit(cache=True)
def ee_jacobians(mount_p, mount_R, axis, tr, lcom, ee_off, base_p, base_R, q):
    """Per-arm geometric Jacobians J (6 x n) and base Jacobian J_b (6 x 6)."""
    z = mount_p.shape[0]
    n = axis.shape[1]
    o, s, Rw, com, ee_p, ee_R = fk_chain(mount_p, mount_R, axis, tr, lcom, ee_off,
                                         base_p, base_R, q)
    J = np.zeros((z, 6, n))
    Jb = np.zeros((z, 6, 6))
    for i in range(z):
        for m in range(n):
            col = _cross(s[i, m], ee_p[i] - o[i, m])
            for a in range(3):
                J[i, a, m] = col[a]
                J[i, 3 + a, m] = s[i, m, a]
        rel = ee_p[i] - base_p
        for a in range(3):
            Jb[i, a, a] = 1.0
            Jb[i, 3 + a, 3 + a] = 1.0
        Jb[i, 0, 4] = rel[2]
        Jb[i, 0, 5] = -rel[1]
        Jb[i, 1, 3] = -rel[2]
        Jb[i, 1, 5] = rel[0]
        Jb[i, 2, 3] = rel[1]
        Jb[i, 2, 4] = -rel[0]
    return J, Jb, ee_p, ee_R


@njit(cache=True)
def unpack_state(statevec, z, n):
    base_p = statevec[0:3].copy()
    quat = statevec[3:7].copy()
    vb = statevec[7:13].copy()
    q = statevec[HDR:HDR + z * n].copy().reshape(z, n)
    dq = statevec[HDR + z * n:HDR + 2 * z * n].copy().reshape(z, n)
    return base_p, quat, vb, q, dq


@njit(cache=True)
def forward_dynamics_kernel(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                            statevec, tau, fext, tau_env, wrench_ext):
    """Accelerations (vdot_b, ddq) under joint torques, EE forces, disturbances."""
    z = mount_p.shape[0]
    n = axis.shape[1]
    base_p, quat, vb, q, dq = unpack_state(statevec, z, n)
    base_R = _quat_to_rot(quat)
    M, c = mass_and_bias(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                         base_p, base_R, vb, q, dq)
    o, s, Rw, com, ee_p, ee_R = fk_chain(mount_p, mount_R, axis, tr, lcom, ee_off,
                                         base_p, base_R, q)
    nd = 6 + z * n
    rhs = np.zeros(nd)
    rhs[0:6] += wrench_ext
    for i in range(z):
        fi = fext[i]
        rhs[0] += fi[0]
        rhs[1] += fi[1]
        rhs[2] += fi[2]
        mom = _cross(ee_p[i] - base_p, fi)
        rhs[3] += mom[0]
        rhs[4] += mom[1]
        rhs[5] += mom[2]
        for m in range(n):
            rhs[6 + i * n + m] += tau[i, m] + tau_env[i, m]
            rhs[6 + i * n + m] += s[i, m, 0] * (_cross(ee_p[i] - o[i, m], fi))[0] \
                + s[i, m, 1] * (_cross(ee_p[i] - o[i, m], fi))[1] \
                + s[i, m, 2] * (_cross(ee_p[i] - o[i, m], fi))[2]
    rhs -= c
    acc = np.linalg.solve(M, rhs)
    return acc[0:6], acc[6:].copy()


@njit(cache=True)
def state_derivative(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                     statevec, tau, fext, tau_env, wrench_ext):
    z = mount_p.shape[0]
    n = axis.shape[1]
    vdot, ddq = forward_dynamics_kernel(bm, bI, mount_p, mount_R, axis, tr, lmass, lin,
                                        lcom, ee_off, statevec, tau, fext, tau_env, wrench_ext)
    d = np.empty(statevec.shape[0])
    d[0:3] = statevec[7:10]
    quat = statevec[3:7]
    w = statevec[10:13]
    wq = np.empty(4)
    wq[0] = 0.0
    wq[1] = w[0]
    wq[2] = w[1]
    wq[3] = w[2]
    d[3:7] = 0.5 * _quat_mul(wq, quat)
    d[7:13] = vdot
    d[HDR:HDR + z * n] = statevec[HDR + z * n:HDR + 2 * z * n]
    d[HDR + z * n:HDR + 2 * z * n] = ddq.ravel()
    return d


@njit(cache=True)
def rk4_step(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
             statevec, tau, fext, tau_env, wrench_ext, dt):
    k1 = state_derivative(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                          statevec, tau, fext, tau_env, wrench_ext)
    k2 = state_derivative(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                          statevec + 0.5 * dt * k1, tau, fext, tau_env, wrench_ext)
    k3 = state_derivative(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                          statevec + 0.5 * dt * k2, tau, fext, tau_env, wrench_ext)
    k4 = state_derivative(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                          statevec + dt * k3, tau, fext, tau_env, wrench_ext)
    out = statevec + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nrm = np.sqrt(out[3] ** 2 + out[4] ** 2 + out[5] ** 2 + out[6] ** 2)
    out[3:7] = out[3:7] / nrm
    return out


@njit(cache=True)
def rollout(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
            statevec, tau, fext, tau_env, wrench_ext, nsteps, dt):
    """Integrate nsteps with inputs held constant; returns the final state."""
    s = statevec.copy()
    for _ in range(nsteps):
        s = rk4_step(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                     s, tau, fext, tau_env, wrench_ext, dt)
    return s


@njit(cache=True)
def rollout_record(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                   statevec, tau, fext, tau_env, wrench_ext, nsteps, dt):
    """Integrate and record every state (nsteps+1 rows incl. the start)."""
    out = np.empty((nsteps + 1, statevec.shape[0]))
    s = statevec.copy()
    out[0] = s
    for k in range(nsteps):
        s = rk4_step(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                     s, tau, fext, tau_env, wrench_ext, dt)
        out[k + 1] = s
    return out


@njit(cache=True)
def ee_velocities(mount_p, mount_R, axis, tr, lcom, ee_off, statevec, z, n):
    """Per-arm end-effector twists via chain composition (J dq + J_b v_b)."""
    base_p, quat, vb, q, dq = unpack_state(statevec, z, n)
    base_R = _quat_to_rot(quat)
    J, Jb, ee_p, ee_R = ee_jacobians(mount_p, mount_R, axis, tr, lcom, ee_off,
                                     base_p, base_R, q)
    out = np.empty((z, 6))
    for i in range(z):
        out[i] = J[i] @ dq[i] + Jb[i] @ vb
    return out


@njit(cache=True)
def advance_positions(statevec, h, z, n):
    """Shift the configuration along current velocities (velocities frozen)."""
    out = statevec.copy()
    out[0:3] = statevec[0:3] + h * statevec[7:10]
    dq_quat = _quat_from_rotvec(h * statevec[10:13])
    qn = _quat_mul(dq_quat, statevec[3:7])
    nrm = np.sqrt(qn[0] ** 2 + qn[1] ** 2 + qn[2] ** 2 + qn[3] ** 2)
    out[3:7] = qn / nrm
    out[HDR:HDR + z * n] = statevec[HDR:HDR + z * n] + h * statevec[HDR + z * n:HDR + 2 * z * n]
    return out


@njit(cache=True)
def ee_velocity_drift(mount_p, mount_R, axis, tr, lcom, ee_off, statevec, z, n, h):
    """d/dt of the end-effector twist map at fixed velocities.

    Central difference of (J dq + J_b v_b) along the frozen-velocity flow:
    equals Jdot dq + Jbdot v_b, the drift needed by the contact rows.
    """
    plus = ee_velocities(mount_p, mount_R, axis, tr, lcom, ee_off,
                         advance_positions(statevec, h, z, n), z, n)
    minus = ee_velocities(mount_p, mount_R, axis, tr, lcom, ee_off,
                          advance_positions(statevec, -h, z, n), z, n)
    return (plus - minus) / (2.0 * h)


@njit(cache=True)
def ik_arms(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
            base_p, base_R, targets, q0, qnom, active, tol, max_iters, damping, null_gain):
    """Position IK for all flagged arms through the generalized Jacobian.

    Damped-least-squares iteration with a nullspace pull toward the nominal
    posture; the pull is annealed away once the position error is small so
    the returned solution satisfies the target to `tol`.
    """
    z = mount_p.shape[0]
    n = axis.shape[1]
    q = q0.copy()
    vb = np.zeros(6)
    dq = np.zeros((z, n))
    lam2 = damping * damping
    for it in range(max_iters):
        M, c = mass_and_bias(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                             base_p, base_R, vb, q, dq)
        J, Jb, ee_p, ee_R = ee_jacobians(mount_p, mount_R, axis, tr, lcom, ee_off,
                                         base_p, base_R, q)
        Mbb = M[0:6, 0:6].copy()
        worst = 0.0
        for i in range(z):
            if active[i] == 0:
                continue
            e = targets[i] - ee_p[i]
            err = np.sqrt(e[0] ** 2 + e[1] ** 2 + e[2] ** 2)
            if err > worst:
                worst = err
            Mbi = M[0:6, 6 + i * n:6 + (i + 1) * n].copy()
            Jg6 = J[i] - Jb[i] @ np.linalg.solve(Mbb, Mbi)
            Jg = Jg6[0:3, :].copy()
            H = Jg.T @ Jg + lam2 * np.eye(n)
            g = Jg.T @ e
            if err > 10.0 * tol:
                g = g + lam2 * null_gain * (qnom[i] - q[i])
            dqstep = np.linalg.solve(H, g)
            # cap the step to keep the linearization honest
            mx = 0.0
            for m in range(n):
                if abs(dqstep[m]) > mx:
                    mx = abs(dqstep[m])
            if mx > 0.5:
                dqstep = dqstep * (0.5 / mx)
            q[i] = q[i] + dqstep
        if worst < tol:
            break
    return q
