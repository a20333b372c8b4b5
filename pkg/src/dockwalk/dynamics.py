"""Floating-base multi-arm dynamics: blocks, Jacobians, momenta, accelerations.

All operations are pure functions of (model, state). The generalized
coordinates are [v_b; dq] with the base twist v_b = [dt_b; omega] expressed in
the inertial frame at the base origin; gravity is zero (orbital free fall).
The stacked system covering the base plus every arm is computed as one unit,
and the per-arm quantities of the reduced formulation are exposed as slices
of it, which is the only decomposition that conserves total momentum when
several arms move at once.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import rotations as rot


class JointLimitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SystemState:
    base_position: np.ndarray      # t_b, inertial frame, m
    base_attitude: np.ndarray      # unit quaternion (w, x, y, z), body->inertial
    base_twist: np.ndarray         # [dt_b; omega], inertial frame
    joint_positions: np.ndarray    # flat, zeta*n
    joint_velocities: np.ndarray   # flat, zeta*n

    def __post_init__(self):
        object.__setattr__(self, "base_position", np.asarray(self.base_position, dtype=float).reshape(3))
        q = np.asarray(self.base_attitude, dtype=float).reshape(4)
        nrm = np.linalg.norm(q)
        if abs(nrm - 1.0) > 1e-9:
            q = q / nrm
        if q[0] < 0.0:
            q = -q
        object.__setattr__(self, "base_attitude", q / np.linalg.norm(q))
        object.__setattr__(self, "base_twist", np.asarray(self.base_twist, dtype=float).reshape(6))
        object.__setattr__(self, "joint_positions", np.asarray(self.joint_positions, dtype=float).ravel())
        object.__setattr__(self, "joint_velocities", np.asarray(self.joint_velocities, dtype=float).ravel())

    def check_limits(self, model):
        lims = model.joint_limit_array().reshape(-1, 2)
        q = self.joint_positions
        low = q < lims[:, 0]
        high = q > lims[:, 1]
        if np.any(low | high):
            bad = np.flatnonzero(low | high)
            warnings.warn(f"joint positions outside limits at indices {bad.tolist()}",
                          JointLimitWarning, stacklevel=2)
        return not np.any(low | high)

    def joints(self, model, arm):
        n = model.joints_per_arm
        return self.joint_positions[arm * n:(arm + 1) * n]

    def joint_rates(self, model, arm):
        n = model.joints_per_arm
        return self.joint_velocities[arm * n:(arm + 1) * n]


def default_state(model, base_position=(0.0, 0.0, 0.8), base_attitude=(1.0, 0.0, 0.0, 0.0)):
    """Nominal stance state (rest posture, zero velocities)."""
    return SystemState(
        base_position=base_position,
        base_attitude=base_attitude,
        base_twist=np.zeros(6),
        joint_positions=model.nominal_joints.ravel().copy(),
        joint_velocities=np.zeros(model.joint_count),
    )


def state_to_vector(state):
    return np.concatenate([state.base_position, state.base_attitude, state.base_twist,
                           state.joint_positions, state.joint_velocities])


def vector_to_state(vec, model):
    zn = model.joint_count
    return SystemState(
        base_position=vec[0:3],
        base_attitude=vec[3:7],
        base_twist=vec[7:13],
        joint_positions=vec[13:13 + zn],
        joint_velocities=vec[13 + zn:13 + 2 * zn],
    )


@dataclass(frozen=True)
class DynamicsBlocks:
    M_bb: np.ndarray     # 6 x 6 composite inertia of the whole system
    M_bm: np.ndarray     # 6 x (zeta*n) base-arm coupling
    M_mm: np.ndarray     # (zeta*n) x (zeta*n), block diagonal per arm
    c_b: np.ndarray      # 6
    c_m: np.ndarray      # zeta*n
    arm_count: int
    joints_per_arm: int

    def M_bi(self, arm):
        n = self.joints_per_arm
        return self.M_bm[:, arm * n:(arm + 1) * n]

    def M_ii(self, arm):
        n = self.joints_per_arm
        return self.M_mm[arm * n:(arm + 1) * n, arm * n:(arm + 1) * n]

    def c_mi(self, arm):
        n = self.joints_per_arm
        return self.c_m[arm * n:(arm + 1) * n]

    def full_matrix(self):
        top = np.hstack([self.M_bb, self.M_bm])
        bottom = np.hstack([self.M_bm.T, self.M_mm])
        return np.vstack([top, bottom])

    def full_bias(self):
        return np.concatenate([self.c_b, self.c_m])


@dataclass(frozen=True)
class ReducedArmDynamics:
    M_star: np.ndarray   # n x n generalized arm inertia
    C_star: np.ndarray   # n generalized bias
    arm_index: int


@dataclass(frozen=True)
class ArmJacobians:
    J_arm: np.ndarray          # 6 x n arm Jacobian at the end-effector
    J_base: np.ndarray         # 6 x 6 base Jacobian at the end-effector
    J_gen: np.ndarray          # 6 x n generalized Jacobian
    bias_velocity: np.ndarray  # 6, J_base M_bb^-1 (per-arm momentum)
    arm_index: int
    ee_position: np.ndarray    # convenience: world end-effector position


def _base_R(state):
    return rot.quat_to_rot(state.base_attitude)


def forward_kinematics(model, state):
    """Per-arm end-effector pose: list of (position, quaternion)."""
    bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    q = state.joint_positions.reshape(z, n)
    o, s, Rw, com, ee_p, ee_R = K.fk_chain(mount_p, mount_R, axis, tr, lcom, ee_off,
                                           state.base_position, _base_R(state), q)
    return [(ee_p[i].copy(), rot.rot_to_quat(ee_R[i])) for i in range(z)]


def ee_positions(model, state):
    return np.array([p for p, _ in forward_kinematics(model, state)])


def inertia_blocks(model, state):
    bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    q = state.joint_positions.reshape(z, n)
    dq = state.joint_velocities.reshape(z, n)
    M, c = K.mass_and_bias(bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off,
                           state.base_position, _base_R(state), state.base_twist, q, dq)
    return DynamicsBlocks(
        M_bb=M[0:6, 0:6], M_bm=M[0:6, 6:], M_mm=M[6:, 6:],
        c_b=c[0:6], c_m=c[6:], arm_count=z, joints_per_arm=n)


def bias_terms(model, state):
    blocks = inertia_blocks(model, state)
    return blocks.c_b, blocks.c_m


def reduced_dynamics(blocks, arm):
    """Schur complement of the base block for one arm (M*, C*)."""
    Mbi = blocks.M_bi(arm)
    X = np.linalg.solve(blocks.M_bb, Mbi)
    M_star = blocks.M_ii(arm) - Mbi.T @ X
    M_star = 0.5 * (M_star + M_star.T)
    C_star = blocks.c_mi(arm) - Mbi.T @ np.linalg.solve(blocks.M_bb, blocks.c_b)
    return ReducedArmDynamics(M_star=M_star, C_star=C_star, arm_index=arm)


def stacked_reduced_dynamics(blocks):
    """Reduced dynamics over all arms jointly: (M*, C*) with cross coupling.

    M* = M_mm - M_bm^T M_bb^-1 M_bm; the per-arm M_i* of the single-arm
    formulation are exactly its diagonal blocks.
    """
    X = np.linalg.solve(blocks.M_bb, blocks.M_bm)
    M_star = blocks.M_mm - blocks.M_bm.T @ X
    M_star = 0.5 * (M_star + M_star.T)
    C_star = blocks.c_m - blocks.M_bm.T @ np.linalg.solve(blocks.M_bb, blocks.c_b)
    return M_star, C_star


def momentum(blocks, state, arm=None):
    """System (or single-arm form) linear/angular momentum about the base origin."""
    h = blocks.M_bb @ state.base_twist
    if arm is None:
        h = h + blocks.M_bm @ state.joint_velocities
    else:
        n = blocks.joints_per_arm
        h = h + blocks.M_bi(arm) @ state.joint_velocities[arm * n:(arm + 1) * n]
    return h[0:3], h[3:6]


def momentum_about_origin(blocks, state):
    """(rho, Psi) shifted to the inertial origin; conserved in free float."""
    rho, psi = momentum(blocks, state)
    return rho, psi + np.cross(state.base_position, rho)


def kinetic_energy(blocks, state):
    v = np.concatenate([state.base_twist, state.joint_velocities])
    return 0.5 * v @ blocks.full_matrix() @ v


def arm_jacobians(model, state, arm):
    bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    q = state.joint_positions.reshape(z, n)
    J, Jb, ee_p, ee_R = K.ee_jacobians(mount_p, mount_R, axis, tr, lcom, ee_off,
                                       state.base_position, _base_R(state), q)
    blocks = inertia_blocks(model, state)
    X = np.linalg.solve(blocks.M_bb, blocks.M_bi(arm))
    J_gen = J[arm] - Jb[arm] @ X
    h = blocks.M_bb @ state.base_twist + blocks.M_bi(arm) @ state.joint_rates(model, arm)
    v_gm = Jb[arm] @ np.linalg.solve(blocks.M_bb, h)
    return ArmJacobians(J_arm=J[arm], J_base=Jb[arm], J_gen=J_gen,
                        bias_velocity=v_gm, arm_index=arm, ee_position=ee_p[arm].copy())


def all_arm_jacobians(model, state):
    """ArmJacobians for every arm sharing one mass-matrix factorization."""
    bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    q = state.joint_positions.reshape(z, n)
    J, Jb, ee_p, ee_R = K.ee_jacobians(mount_p, mount_R, axis, tr, lcom, ee_off,
                                       state.base_position, _base_R(state), q)
    blocks = inertia_blocks(model, state)
    out = []
    for arm in range(z):
        X = np.linalg.solve(blocks.M_bb, blocks.M_bi(arm))
        J_gen = J[arm] - Jb[arm] @ X
        h = blocks.M_bb @ state.base_twist + blocks.M_bi(arm) @ state.joint_rates(model, arm)
        v_gm = Jb[arm] @ np.linalg.solve(blocks.M_bb, h)
        out.append(ArmJacobians(J_arm=J[arm], J_base=Jb[arm], J_gen=J_gen,
                                bias_velocity=v_gm, arm_index=arm, ee_position=ee_p[arm].copy()))
    return out, blocks


def end_effector_velocity(jac, state, arm):
    """Twist of the end-effector from the generalized-Jacobian form."""
    n = jac.J_gen.shape[1]
    dq = state.joint_velocities[arm * n:(arm + 1) * n]
    return jac.J_gen @ dq + jac.bias_velocity


def ee_velocity_drift(model, state, h=1e-6):
    """Per-arm d/dt of the twist map at frozen velocities (Jdot dq + Jbdot v_b)."""
    bm, bI, mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    return K.ee_velocity_drift(mount_p, mount_R, axis, tr, lcom, ee_off,
                               state_to_vector(state), z, n, h)


def forward_dynamics(model, state, tau, f, tau_env=None, wrench_b_ext=None):
    """Accelerations (vdot_b, ddq) of the full stacked system.

    f holds one inertial-frame 3-vector per arm, applied at the current
    end-effector positions; tau and tau_env are per-joint.
    """
    z, n = model.arm_count, model.joints_per_arm
    tau = np.asarray(tau, dtype=float).reshape(z, n)
    f = np.zeros((z, 3)) if f is None else np.asarray(f, dtype=float).reshape(z, 3)
    tau_env = np.zeros((z, n)) if tau_env is None else np.asarray(tau_env, dtype=float).reshape(z, n)
    wrench = np.zeros(6) if wrench_b_ext is None else np.asarray(wrench_b_ext, dtype=float).reshape(6)
    packed = model.packed()
    vdot, ddq = K.forward_dynamics_kernel(*packed, state_to_vector(state), tau, f, tau_env, wrench)
    return vdot, ddq


def inverse_dynamics(model, state, vdot_b, ddq):
    """Generalized forces (h_b, tau) realizing the given accelerations."""
    blocks = inertia_blocks(model, state)
    acc = np.concatenate([np.asarray(vdot_b, dtype=float).reshape(6),
                          np.asarray(ddq, dtype=float).ravel()])
    gen = blocks.full_matrix() @ acc + blocks.full_bias()
    return gen[0:6], gen[6:]


def solve_ik(model, base_position, base_R, targets, q0, active=None,
             tol=1e-10, max_iters=60, damping=0.05, null_gain=1.0):
    """Position IK for the flagged arms at a prescribed base pose.

    Damped least squares through the generalized Jacobian, biased toward the
    model's nominal posture while far from the target. Returns (zeta, n)
    joint angles; arms not flagged keep their q0 values.
    """
    packed = model.packed()
    z, n = model.arm_count, model.joints_per_arm
    act = np.ones(z, dtype=np.int64) if active is None else np.asarray(active, dtype=np.int64)
    q = K.ik_arms(*packed, np.asarray(base_position, dtype=float).reshape(3),
                  np.asarray(base_R, dtype=float).reshape(3, 3),
                  np.asarray(targets, dtype=float).reshape(z, 3),
                  np.asarray(q0, dtype=float).reshape(z, n),
                  model.nominal_joints, act, tol, max_iters, damping, null_gain)
    return q
