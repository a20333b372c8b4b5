"""Rotation utilities: quaternions (w, x, y, z), rotation matrices, Euler XYZ.

Conventions used throughout the package:
  - quaternions are unit, ordered (w, x, y, z), and rotate body-frame vectors
    into the inertial frame (R = quat_to_rot(q) is body -> world);
  - Euler angles are intrinsic XYZ: R = Rx(a) @ Ry(b) @ Rz(c);
  - angular velocities are expressed in the world frame.
"""

import numpy as np


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion cannot be normalized")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_mul(q1, q2):
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_rot(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(R):
    """Stable matrix -> quaternion conversion (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def rot_axis_angle(axis, angle):
    """Rodrigues rotation about a unit axis."""
    c = np.cos(angle)
    s = np.sin(angle)
    K = skew(axis)
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-15:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def quat_from_rotvec(v):
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    if angle < 1e-15:
        return quat_normalize(np.array([1.0, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]]))
    return quat_from_axis_angle(v / angle, angle)


def rot_to_rotvec(R):
    """Rotation-vector (so3 log) of a rotation matrix."""
    q = rot_to_quat(R)
    w = min(1.0, max(-1.0, q[0]))
    vec = q[1:]
    n = np.linalg.norm(vec)
    if n < 1e-12:
        return 2.0 * vec
    angle = 2.0 * np.arctan2(n, w)
    return angle * vec / n


def euler_xyz_to_rot(angles):
    a, b, c = angles
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cc, sc = np.cos(c), np.sin(c)
    Rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    Ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    Rz = np.array([[cc, -sc, 0], [sc, cc, 0], [0, 0, 1]])
    return Rx @ Ry @ Rz


def rot_to_euler_xyz(R):
    """Inverse of euler_xyz_to_rot; valid away from the cos(b)=0 singularity."""
    b = np.arcsin(min(1.0, max(-1.0, R[0, 2])))
    if abs(np.cos(b)) < 1e-9:
        # gimbal lock: fold the lost degree of freedom into a
        a = np.arctan2(R[1, 0], R[1, 1])
        return np.array([a, b, 0.0])
    a = np.arctan2(-R[1, 2], R[2, 2])
    c = np.arctan2(-R[0, 1], R[0, 0])
    return np.array([a, b, c])


def euler_xyz_to_quat(angles):
    return rot_to_quat(euler_xyz_to_rot(angles))


def quat_to_euler_xyz(q):
    return rot_to_euler_xyz(quat_to_rot(q))


def euler_xyz_rate_matrix(angles):
    """E(phi) with omega_world = E(phi) @ phi_dot for intrinsic XYZ angles."""
    a, b, _ = angles
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    # columns: x, Rx*y, Rx*Ry*z
    return np.array([
        [1.0, 0.0, sb],
        [0.0, ca, -sa * cb],
        [0.0, sa, ca * cb],
    ])


def euler_xyz_rate_matrix_dot(angles, rates):
    """Time derivative of euler_xyz_rate_matrix along angle rates."""
    a, b, _ = angles
    da, db, _ = rates
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    return np.array([
        [0.0, 0.0, cb * db],
        [0.0, -sa * da, -ca * cb * da + sa * sb * db],
        [0.0, ca * da, -sa * cb * da - ca * sb * db],
    ])


def quat_derivative(q, omega_world):
    """d/dt of a body->world quaternion under world-frame angular velocity."""
    return 0.5 * quat_mul(np.array([0.0, *omega_world]), q)


def quat_rotate(q, v):
    return quat_to_rot(q) @ v
