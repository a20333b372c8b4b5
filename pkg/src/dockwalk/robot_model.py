"""Robot and scenario description: masses, inertias, chains, limits, maneuver.

A robot is a rigid body carrying ``zeta`` identical serial arms. Each arm
hangs from a mount frame on the body's bottom face; link j rotates about its
joint axis (given in the parent frame) and extends along its local x axis to
the next joint. All numeric defaults for the reference robot live in
``build_default_robot``; scenario files are INI-style structured text parsed
by ``load_scenario``.
"""

import configparser
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import rotations as rot
from . import surface_map as sm


class ScenarioError(ValueError):
    """Scenario document violates the schema (unknown/malformed keys)."""


class ValidationError(ValueError):
    """Model or scenario invariants violated; message lists all failures."""


@dataclass(frozen=True)
class LinkParams:
    mass: float                 # kg
    length: float               # m, offset along link x to the next joint
    inertia: np.ndarray         # 3x3, kg m^2, about link COM, link frame
    com_offset: np.ndarray      # 3, m, in link frame
    joint_axis: np.ndarray      # unit 3-vector in parent frame
    joint_limits: tuple = (-2.967, 2.967)   # rad
    torque_max: float = 50.0    # N m

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3, 3))
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float).reshape(3))
        object.__setattr__(self, "joint_axis", np.asarray(self.joint_axis, dtype=float).reshape(3))

    def violations(self, tag=""):
        out = []
        if not self.mass > 0.0:
            out.append(f"{tag}mass not positive ({self.mass})")
        if self.length < 0.0:
            out.append(f"{tag}length negative ({self.length})")
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            out.append(f"{tag}inertia not symmetric")
        else:
            eigs = np.linalg.eigvalsh(0.5 * (self.inertia + self.inertia.T))
            if eigs[0] < -1e-12:
                out.append(f"{tag}inertia not PSD (min eigenvalue {eigs[0]:.3g})")
        if abs(np.linalg.norm(self.joint_axis) - 1.0) > 1e-12:
            out.append(f"{tag}joint_axis not unit (norm {np.linalg.norm(self.joint_axis):.12g})")
        if not self.joint_limits[0] < self.joint_limits[1]:
            out.append(f"{tag}joint_limits not increasing")
        if not self.torque_max > 0.0:
            out.append(f"{tag}torque_max not positive ({self.torque_max})")
        return out


@dataclass(frozen=True)
class RobotModel:
    body_mass: float
    body_inertia: np.ndarray        # 3x3, kg m^2
    body_height: float              # m
    arms: tuple                     # zeta tuples of n LinkParams
    arm_mounts: tuple               # zeta (position 3, rotation 3x3) in body frame
    nominal_ee: np.ndarray          # (zeta, 3) nominal end-effector, body frame
    reach_half_edge: np.ndarray     # (zeta, 3) workspace prism half-edges
    nominal_joints: np.ndarray      # (zeta, n) rest posture used as IK bias

    def __post_init__(self):
        object.__setattr__(self, "body_inertia", np.asarray(self.body_inertia, dtype=float).reshape(3, 3))
        object.__setattr__(self, "nominal_ee", np.asarray(self.nominal_ee, dtype=float).reshape(len(self.arms), 3))
        object.__setattr__(self, "reach_half_edge", np.asarray(self.reach_half_edge, dtype=float).reshape(len(self.arms), 3))
        arms = tuple(tuple(a) for a in self.arms)
        object.__setattr__(self, "arms", arms)
        mounts = tuple((np.asarray(p, dtype=float).reshape(3), np.asarray(R, dtype=float).reshape(3, 3))
                       for p, R in self.arm_mounts)
        object.__setattr__(self, "arm_mounts", mounts)
        n = self.joints_per_arm
        object.__setattr__(self, "nominal_joints", np.asarray(self.nominal_joints, dtype=float).reshape(len(arms), n))

    @property
    def arm_count(self):
        return len(self.arms)

    @property
    def joints_per_arm(self):
        return len(self.arms[0]) if self.arms else 0

    @property
    def joint_count(self):
        return self.arm_count * self.joints_per_arm

    @property
    def total_mass(self):
        return self.body_mass + sum(l.mass for arm in self.arms for l in arm)

    def torque_limits(self):
        return np.array([[l.torque_max for l in arm] for arm in self.arms])

    def joint_limit_array(self):
        return np.array([[[l.joint_limits[0], l.joint_limits[1]] for l in arm] for arm in self.arms])

    def packed(self):
        """Flat array bundle consumed by the numeric kernels (memoized)."""
        cached = getattr(self, "_packed_cache", None)
        if cached is not None:
            return cached
        z, n = self.arm_count, self.joints_per_arm
        mount_p = np.array([m[0] for m in self.arm_mounts])
        mount_R = np.array([m[1] for m in self.arm_mounts])
        axis = np.zeros((z, n, 3))
        tr = np.zeros((z, n, 3))
        lmass = np.zeros((z, n))
        lin = np.zeros((z, n, 3, 3))
        lcom = np.zeros((z, n, 3))
        ee_off = np.zeros((z, 3))
        for i, arm in enumerate(self.arms):
            for j, link in enumerate(arm):
                axis[i, j] = link.joint_axis
                if j > 0:
                    tr[i, j] = (arm[j - 1].length, 0.0, 0.0)
                lmass[i, j] = link.mass
                lin[i, j] = link.inertia
                lcom[i, j] = link.com_offset
            ee_off[i] = (arm[-1].length, 0.0, 0.0)
        bundle = (float(self.body_mass), np.ascontiguousarray(self.body_inertia),
                  mount_p, mount_R, axis, tr, lmass, lin, lcom, ee_off)
        object.__setattr__(self, "_packed_cache", bundle)
        return bundle


def validate_model(model):
    """Validation report: empty list iff every invariant holds."""
    out = []
    if not model.body_mass > 0.0:
        out.append(f"body mass not positive ({model.body_mass})")
    if not np.allclose(model.body_inertia, model.body_inertia.T, atol=1e-12):
        out.append("body inertia not symmetric")
    else:
        eigs = np.linalg.eigvalsh(model.body_inertia)
        if eigs[0] <= 0.0:
            out.append(f"body inertia not positive definite (min eigenvalue {eigs[0]:.3g})")
    counts = {len(arm) for arm in model.arms}
    if len(counts) > 1:
        out.append(f"arms have differing joint counts {sorted(counts)}")
    for i, arm in enumerate(model.arms):
        for j, link in enumerate(arm):
            out.extend(link.violations(tag=f"arm {i} link {j}: "))
    for i, (p, R) in enumerate(model.arm_mounts):
        if abs(np.linalg.det(R) - 1.0) > 1e-9 or np.max(np.abs(R @ R.T - np.eye(3))) > 1e-9:
            out.append(f"arm {i} mount rotation not orthonormal")
    if np.any(model.reach_half_edge <= 0.0):
        out.append("reach_half_edge must be componentwise positive")
    return out


# Reference robot: body parameters and the six per-link parameter rows.
_BODY_MASS = 40.0
_BODY_HEIGHT = 0.843
_BODY_INERTIA = (18.6, 15.4, 4.1, -0.008, -0.027, 0.058)   # xx yy zz xy xz yz

_LINK_ROWS = (
    # mass    length  Ixx     Iyy     Izz     Ixy     Ixz      Iyz
    (5.369, 0.18, 0.0341, 0.0353, 0.0216, 0.0, -0.0043, -0.0001),
    (10.0, 0.61, 0.0281, 0.7707, 0.7694, 0.0001, -0.0156, 0.0),
    (3.9, 0.57, 0.0101, 0.3093, 0.3065, 0.0001, 0.0092, 0.0),
    (2.1, 0.17, 0.003, 0.002, 0.0026, 0.0, 0.0, -0.0002),
    (1.5, 0.12, 0.003, 0.002, 0.0026, 0.0, 0.0, -0.0002),
    (0.6, 0.11, 0.0, 0.0004, 0.0003, 0.0, 0.0, 0.0),
)

# Joint axes in the parent frame: yaw about mount z, two pitch joints, then a
# roll-pitch-roll wrist.
_JOINT_AXES = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (0.0, 1.0, 0.0),
               (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))

_MOUNT_RADIUS = 0.4
_NOMINAL_DROP = 0.8          # body origin height above the nominal stance plane

# Rest posture (one arm; every arm uses the same local posture). Solved once
# with the damped-least-squares IK so the end-effector sits at nominal_ee;
# frozen here so model construction needs no solver.
_NOMINAL_POSTURE = (0.0, 0.95820029, -2.17287276, 0.0, -0.35619246, 0.0)


def _inertia_tensor(xx, yy, zz, xy, xz, yz):
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def _mount_rotation(azimuth):
    c, s = np.cos(azimuth), np.sin(azimuth)
    # columns: outward x, lateral y, z pointing down at the target surface
    return np.array([[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, -1.0]])


def build_default_robot(arm_count=4):
    """The reference four-arm robot with all tabulated dynamic parameters."""
    links = []
    for row, ax in zip(_LINK_ROWS, _JOINT_AXES):
        m, length = row[0], row[1]
        links.append(LinkParams(
            mass=m, length=length,
            inertia=_inertia_tensor(*row[2:]),
            com_offset=(0.5 * length, 0.0, 0.0),
            joint_axis=ax,
        ))
    arm = tuple(links)
    mounts = []
    nominal_ee = []
    for k in range(arm_count):
        az = 2.0 * np.pi * k / arm_count
        p = np.array([_MOUNT_RADIUS * np.cos(az), _MOUNT_RADIUS * np.sin(az), -0.5 * _BODY_HEIGHT])
        mounts.append((p, _mount_rotation(az)))
        nominal_ee.append((p[0], p[1], -_NOMINAL_DROP))
    return RobotModel(
        body_mass=_BODY_MASS,
        body_inertia=_inertia_tensor(*_BODY_INERTIA),
        body_height=_BODY_HEIGHT,
        arms=tuple(arm for _ in range(arm_count)),
        arm_mounts=tuple(mounts),
        nominal_ee=np.array(nominal_ee),
        reach_half_edge=np.tile((0.4, 0.4, 0.3), (arm_count, 1)),
        nominal_joints=np.tile(_NOMINAL_POSTURE, (arm_count, 1)),
    )


@dataclass(frozen=True)
class Scenario:
    model: RobotModel
    initial_position: np.ndarray        # t_b at t=0, inertial
    initial_attitude: np.ndarray        # unit quaternion, body->inertial
    goal_position: np.ndarray
    goal_attitude: np.ndarray
    duration: float                     # maneuver duration T, s
    docking_phase_count: int            # N docking phases per arm
    map: sm.HeightMap
    grid: sm.DockingGrid | None = None
    safety_distance: float = 0.5        # body-surface clearance delta, m
    friction: float = 0.5
    mu_bar_factor: float = 0.99         # pyramid coefficient = factor * mu / sqrt(2)
    force_weights: np.ndarray = None    # (zeta, 3) cost weights on f components
    task_weight_joint: float = 1.0
    task_weight_body: float = 1.0
    kp_joint: float = 25.0
    kd_joint: float = 10.0
    kp_body: float = 25.0
    kd_body: float = 10.0
    stagger: float = 0.25
    env_torque_joint: np.ndarray = None     # (zeta, n) constant disturbance
    gravity_gradient: bool = False
    orbital_rate: float = 0.0011            # rad/s, used when gravity_gradient
    nadir_axis: np.ndarray = None           # unit vector toward the primary
    control_rate: float = 500.0             # Hz
    sim_dt: float = 1e-3
    collocation_nodes: int = 5
    min_phase_duration: float = 0.2
    body_knot_rate: float = 1.0             # body-spline knots per second
    seed: int = 0

    def __post_init__(self):
        z, n = self.model.arm_count, self.model.joints_per_arm
        for name in ("initial_position", "goal_position"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        for name in ("initial_attitude", "goal_attitude"):
            object.__setattr__(self, name, rot.quat_normalize(np.asarray(getattr(self, name), dtype=float).reshape(4)))
        fw = self.force_weights if self.force_weights is not None else np.ones((z, 3))
        object.__setattr__(self, "force_weights", np.asarray(fw, dtype=float).reshape(z, 3))
        et = self.env_torque_joint if self.env_torque_joint is not None else np.zeros((z, n))
        object.__setattr__(self, "env_torque_joint", np.asarray(et, dtype=float).reshape(z, n))
        na = self.nadir_axis if self.nadir_axis is not None else np.array([0.0, 0.0, -1.0])
        na = np.asarray(na, dtype=float).reshape(3)
        object.__setattr__(self, "nadir_axis", na / np.linalg.norm(na))
        violations = self._violations()
        if violations:
            raise ValidationError("; ".join(violations))

    def _violations(self):
        out = validate_model(self.model)
        if not self.duration > 0.0:
            out.append(f"maneuver_duration must be positive ({self.duration})")
        if self.docking_phase_count < 1:
            out.append(f"docking_phase_count must be >= 1 ({self.docking_phase_count})")
        if not self.safety_distance > 0.0:
            out.append(f"safety_distance must be positive ({self.safety_distance})")
        if not 0.0 < self.friction < 2.0:
            out.append(f"friction must lie in (0, 2) ({self.friction})")
        if not (0.0 < self.mu_bar_factor <= 1.0):
            out.append(f"mu_bar_factor must lie in (0, 1] ({self.mu_bar_factor})")
        for g in ("kp_joint", "kd_joint", "kp_body", "kd_body"):
            if not getattr(self, g) > 0.0:
                out.append(f"{g} must be positive ({getattr(self, g)})")
        for w in ("task_weight_joint", "task_weight_body"):
            if not getattr(self, w) > 0.0:
                out.append(f"{w} must be positive ({getattr(self, w)})")
        if np.any(self.force_weights < 0.0):
            out.append("force_weights must be non-negative")
        if not 0.0 <= self.stagger < 1.0:
            out.append(f"stagger must lie in [0, 1) ({self.stagger})")
        if not self.control_rate > 0.0:
            out.append("control_rate must be positive")
        if not self.sim_dt > 0.0:
            out.append("sim_dt must be positive")
        return out

    @property
    def mu_bar(self):
        return self.mu_bar_factor * self.friction / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# Scenario file schema (INI structured text).

_BODY_KEYS = {"mass", "height", "inertia"}
_ARM_KEYS = {"mount_position", "mount_azimuth", "nominal_ee", "reach_half_edge", "nominal_joints"}
_LINK_KEYS = {"mass", "length", "inertia", "com_offset", "joint_axis", "joint_limits", "torque_max"}
_SURFACE_KEYS = {"kind", "z0", "x_range", "y_range", "resolution", "file",
                 "docking_grid", "grid_spacing"}
_MANEUVER_KEYS = {"initial_position", "initial_attitude", "goal_position", "goal_attitude",
                  "duration", "docking_phases", "stagger", "safety_distance"}
_CONTROLLER_KEYS = {"friction", "mu_bar_factor", "kp_joint", "kd_joint", "kp_body", "kd_body",
                    "task_weight_joint", "task_weight_body", "force_weights",
                    "env_torque_joint", "gravity_gradient", "orbital_rate", "nadir_axis",
                    "control_rate", "sim_dt", "collocation_nodes", "min_phase_duration",
                    "body_knot_rate", "seed"}


def _floats(text, count=None, key=""):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ScenarioError(f"key '{key}': cannot parse numbers from '{text}'") from exc
    if count is not None and len(vals) != count:
        raise ScenarioError(f"key '{key}': expected {count} numbers, got {len(vals)}")
    return vals


def _bool(text, key=""):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ScenarioError(f"key '{key}': expected boolean, got '{text}'")


def load_scenario(source):
    """Parse a scenario document (path or text) into a Scenario.

    Unknown sections or keys are rejected with the offending name; invariant
    violations are collected and raised together as a ValidationError.
    """
    text = source
    if "\n" not in str(source) and "=" not in str(source):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc

    default = build_default_robot()
    z, n = default.arm_count, default.joints_per_arm

    body_mass, body_h = _BODY_MASS, _BODY_HEIGHT
    body_inertia = _inertia_tensor(*_BODY_INERTIA)
    arm_over = {}
    link_over = {}
    for sec in cp.sections():
        if sec == "body":
            for key, val in cp["body"].items():
                if key not in _BODY_KEYS:
                    raise ScenarioError(f"unknown key '{key}' in [body]")
                if key == "mass":
                    body_mass = _floats(val, 1, "body.mass")[0]
                elif key == "height":
                    body_h = _floats(val, 1, "body.height")[0]
                else:
                    body_inertia = _inertia_tensor(*_floats(val, 6, "body.inertia"))
        elif sec.startswith("arm."):
            parts = sec.split(".")
            if len(parts) == 2:
                idx = _arm_index(parts[1], z, sec)
                entries = {}
                for key, val in cp[sec].items():
                    if key not in _ARM_KEYS:
                        raise ScenarioError(f"unknown key '{key}' in [{sec}]")
                    entries[key] = val
                arm_over[idx] = entries
            elif len(parts) == 4 and parts[2] == "link":
                ai = _arm_index(parts[1], z, sec)
                li = _arm_index(parts[3], n, sec)
                entries = {}
                for key, val in cp[sec].items():
                    if key not in _LINK_KEYS:
                        raise ScenarioError(f"unknown key '{key}' in [{sec}]")
                    entries[key] = val
                link_over[(ai, li)] = entries
            else:
                raise ScenarioError(f"unknown section [{sec}]")
        elif sec not in ("surface", "maneuver", "controller"):
            raise ScenarioError(f"unknown section [{sec}]")
        else:
            allowed = {"surface": _SURFACE_KEYS, "maneuver": _MANEUVER_KEYS,
                       "controller": _CONTROLLER_KEYS}[sec]
            for key in cp[sec]:
                if key not in allowed:
                    raise ScenarioError(f"unknown key '{key}' in [{sec}]")

    arms = [list(default.arms[i]) for i in range(z)]
    for (ai, li), entries in link_over.items():
        kw = {}
        for key, val in entries.items():
            tag = f"arm.{ai + 1}.link.{li + 1}.{key}"
            if key in ("mass", "length", "torque_max"):
                kw[key] = _floats(val, 1, tag)[0]
            elif key == "inertia":
                kw["inertia"] = _inertia_tensor(*_floats(val, 6, tag))
            elif key == "com_offset":
                kw["com_offset"] = _floats(val, 3, tag)
            elif key == "joint_axis":
                kw["joint_axis"] = _floats(val, 3, tag)
            elif key == "joint_limits":
                kw["joint_limits"] = tuple(_floats(val, 2, tag))
        arms[ai][li] = replace(arms[ai][li], **kw)

    mounts = list(default.arm_mounts)
    nominal_ee = default.nominal_ee.copy()
    reach = default.reach_half_edge.copy()
    nom_q = default.nominal_joints.copy()
    for ai, entries in arm_over.items():
        pos, az = mounts[ai][0], None
        for key, val in entries.items():
            tag = f"arm.{ai + 1}.{key}"
            if key == "mount_position":
                pos = np.array(_floats(val, 3, tag))
            elif key == "mount_azimuth":
                az = _floats(val, 1, tag)[0]
            elif key == "nominal_ee":
                nominal_ee[ai] = _floats(val, 3, tag)
            elif key == "reach_half_edge":
                reach[ai] = _floats(val, 3, tag)
            elif key == "nominal_joints":
                nom_q[ai] = _floats(val, n, tag)
        R = _mount_rotation(az) if az is not None else mounts[ai][1]
        mounts[ai] = (pos, R)

    model = RobotModel(
        body_mass=body_mass, body_inertia=body_inertia, body_height=body_h,
        arms=tuple(tuple(a) for a in arms), arm_mounts=tuple(mounts),
        nominal_ee=nominal_ee, reach_half_edge=reach, nominal_joints=nom_q)

    # surface
    surf = cp["surface"] if cp.has_section("surface") else {}
    kind = surf.get("kind", "planar").strip().lower()
    if kind == "file":
        if "file" not in surf:
            raise ScenarioError("surface.kind=file requires key 'file'")
        hmap = sm.load_heightmap(surf["file"])
    elif kind == "planar":
        z0 = _floats(surf.get("z0", "0"), 1, "surface.z0")[0]
        xr = _floats(surf.get("x_range", "-1.5 4.0"), 2, "surface.x_range")
        yr = _floats(surf.get("y_range", "-1.5 1.5"), 2, "surface.y_range")
        res = _floats(surf.get("resolution", "0.1"), 1, "surface.resolution")[0]
        hmap = sm.build_planar_map((tuple(xr), tuple(yr)), res, z0)
    else:
        raise ScenarioError(f"surface.kind must be planar or file, got '{kind}'")
    grid = None
    if "docking_grid" in surf and _bool(surf["docking_grid"], "surface.docking_grid"):
        spacing = _floats(surf.get("grid_spacing", "0.5"), 1, "surface.grid_spacing")[0]
        grid = sm.make_docking_grid(hmap, spacing)

    # maneuver
    man = cp["maneuver"] if cp.has_section("maneuver") else {}
    init_p = np.array(_floats(man.get("initial_position", "0 0 0.8"), 3, "maneuver.initial_position"))
    goal_p = np.array(_floats(man.get("goal_position", "0 0 0.8"), 3, "maneuver.goal_position"))
    init_q = rot.euler_xyz_to_quat(_floats(man.get("initial_attitude", "0 0 0"), 3, "maneuver.initial_attitude"))
    goal_q = rot.euler_xyz_to_quat(_floats(man.get("goal_attitude", "0 0 0"), 3, "maneuver.goal_attitude"))
    duration = _floats(man.get("duration", "16"), 1, "maneuver.duration")[0]
    phases = man.get("docking_phases", "4")
    try:
        phases = int(phases)
    except ValueError as exc:
        raise ScenarioError(f"maneuver.docking_phases must be an integer, got '{phases}'") from exc
    stagger = _floats(man.get("stagger", "0.25"), 1, "maneuver.stagger")[0]
    delta = _floats(man.get("safety_distance", "0.5"), 1, "maneuver.safety_distance")[0]

    # controller
    ctl = cp["controller"] if cp.has_section("controller") else {}
    kw = {}
    scalars = {"friction": 0.5, "mu_bar_factor": 0.99, "kp_joint": 25.0, "kd_joint": 10.0,
               "kp_body": 25.0, "kd_body": 10.0, "task_weight_joint": 1.0,
               "task_weight_body": 1.0, "orbital_rate": 0.0011, "control_rate": 500.0,
               "sim_dt": 1e-3, "min_phase_duration": 0.2, "body_knot_rate": 1.0}
    for key, dflt in scalars.items():
        kw[key] = _floats(ctl.get(key, repr(dflt)), 1, f"controller.{key}")[0]
    kw["collocation_nodes"] = int(_floats(ctl.get("collocation_nodes", "5"), 1, "controller.collocation_nodes")[0])
    kw["seed"] = int(_floats(ctl.get("seed", "0"), 1, "controller.seed")[0])
    kw["gravity_gradient"] = _bool(ctl.get("gravity_gradient", "false"), "controller.gravity_gradient")
    if "nadir_axis" in ctl:
        kw["nadir_axis"] = np.array(_floats(ctl["nadir_axis"], 3, "controller.nadir_axis"))
    if "force_weights" in ctl:
        vals = _floats(ctl["force_weights"], None, "controller.force_weights")
        if len(vals) == 3:
            kw["force_weights"] = np.tile(vals, (z, 1))
        elif len(vals) == 3 * z:
            kw["force_weights"] = np.array(vals).reshape(z, 3)
        else:
            raise ScenarioError(f"controller.force_weights expects 3 or {3 * z} numbers")
    if "env_torque_joint" in ctl:
        vals = _floats(ctl["env_torque_joint"], None, "controller.env_torque_joint")
        if len(vals) == 1:
            kw["env_torque_joint"] = np.full((z, n), vals[0])
        elif len(vals) == z * n:
            kw["env_torque_joint"] = np.array(vals).reshape(z, n)
        else:
            raise ScenarioError(f"controller.env_torque_joint expects 1 or {z * n} numbers")

    return Scenario(
        model=model, initial_position=init_p, initial_attitude=init_q,
        goal_position=goal_p, goal_attitude=goal_q, duration=duration,
        docking_phase_count=phases, map=hmap, grid=grid, safety_distance=delta,
        stagger=stagger, **kw)


def _arm_index(token, count, sec):
    try:
        idx = int(token) - 1
    except ValueError as exc:
        raise ScenarioError(f"unknown section [{sec}]") from exc
    if not 0 <= idx < count:
        raise ScenarioError(f"section [{sec}]: index out of range 1..{count}")
    return idx


def _fmt(values):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    return " ".join(repr(float(v)) for v in arr)


def save_scenario(scn, path_or_buf):
    """Write a scenario document that reloads to a field-identical Scenario."""
    m = scn.model
    out = io.StringIO()
    ine = m.body_inertia
    out.write("[body]\n")
    out.write(f"mass = {_fmt(m.body_mass)}\n")
    out.write(f"height = {_fmt(m.body_height)}\n")
    out.write(f"inertia = {_fmt([ine[0, 0], ine[1, 1], ine[2, 2], ine[0, 1], ine[0, 2], ine[1, 2]])}\n\n")
    for i, arm in enumerate(m.arms):
        p, R = m.arm_mounts[i]
        az = np.arctan2(R[1, 0], R[0, 0])
        out.write(f"[arm.{i + 1}]\n")
        out.write(f"mount_position = {_fmt(p)}\n")
        out.write(f"mount_azimuth = {_fmt(az)}\n")
        out.write(f"nominal_ee = {_fmt(m.nominal_ee[i])}\n")
        out.write(f"reach_half_edge = {_fmt(m.reach_half_edge[i])}\n")
        out.write(f"nominal_joints = {_fmt(m.nominal_joints[i])}\n\n")
        for j, link in enumerate(arm):
            li = link.inertia
            out.write(f"[arm.{i + 1}.link.{j + 1}]\n")
            out.write(f"mass = {_fmt(link.mass)}\n")
            out.write(f"length = {_fmt(link.length)}\n")
            out.write(f"inertia = {_fmt([li[0, 0], li[1, 1], li[2, 2], li[0, 1], li[0, 2], li[1, 2]])}\n")
            out.write(f"com_offset = {_fmt(link.com_offset)}\n")
            out.write(f"joint_axis = {_fmt(link.joint_axis)}\n")
            out.write(f"joint_limits = {_fmt(link.joint_limits)}\n")
            out.write(f"torque_max = {_fmt(link.torque_max)}\n\n")
    hm = scn.map
    out.write("[surface]\n")
    if np.ptp(hm.heights) == 0.0:
        out.write("kind = planar\n")
        out.write(f"z0 = {_fmt(hm.heights[0, 0])}\n")
        out.write(f"x_range = {_fmt([hm.origin[0], hm.x_max])}\n")
        out.write(f"y_range = {_fmt([hm.origin[1], hm.y_max])}\n")
        out.write(f"resolution = {_fmt(hm.resolution)}\n")
    else:
        raise ValueError("non-planar maps must be exported via save_heightmap and kind=file")
    if scn.grid is not None:
        out.write("docking_grid = true\n")
        out.write(f"grid_spacing = {_fmt(scn.grid.spacing)}\n")
    out.write("\n[maneuver]\n")
    out.write(f"initial_position = {_fmt(scn.initial_position)}\n")
    out.write(f"initial_attitude = {_fmt(rot.quat_to_euler_xyz(scn.initial_attitude))}\n")
    out.write(f"goal_position = {_fmt(scn.goal_position)}\n")
    out.write(f"goal_attitude = {_fmt(rot.quat_to_euler_xyz(scn.goal_attitude))}\n")
    out.write(f"duration = {_fmt(scn.duration)}\n")
    out.write(f"docking_phases = {scn.docking_phase_count}\n")
    out.write(f"stagger = {_fmt(scn.stagger)}\n")
    out.write(f"safety_distance = {_fmt(scn.safety_distance)}\n")
    out.write("\n[controller]\n")
    for key in ("friction", "mu_bar_factor", "kp_joint", "kd_joint", "kp_body", "kd_body",
                "task_weight_joint", "task_weight_body", "orbital_rate", "control_rate",
                "sim_dt", "min_phase_duration", "body_knot_rate"):
        out.write(f"{key} = {_fmt(getattr(scn, key))}\n")
    out.write(f"collocation_nodes = {scn.collocation_nodes}\n")
    out.write(f"seed = {scn.seed}\n")
    out.write(f"gravity_gradient = {'true' if scn.gravity_gradient else 'false'}\n")
    out.write(f"nadir_axis = {_fmt(scn.nadir_axis)}\n")
    out.write(f"force_weights = {_fmt(scn.force_weights.ravel())}\n")
    out.write(f"env_torque_joint = {_fmt(scn.env_torque_joint.ravel())}\n")
    text = out.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
