"""Serial-arm rigid-body dynamics.

A fixed-base serial chain of revolute joints. Joint i rotates link i about a
unit axis fixed in the parent link, offset from the parent origin by a
constant translation. Link inertial parameters are expressed in the link's
own frame (origin at the joint). Everything below works in world coordinates,
which keeps the recursions easy to vectorize over a batch of candidate
terminal-link parameter sets.

The batched variants carry a leading batch axis on q, q_dot, tau and on the
terminal link parameters; per-element results are bitwise-identical to the
single-sample code paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .inertial import (
    InertialParams,
    check_consistency,
    compose_params,
    inertia_vec_to_mat,
    translate_params,
)


@dataclass(frozen=True)
class Joint:
    axis: np.ndarray  # unit rotation axis in the parent frame
    offset: np.ndarray  # joint origin in the parent frame

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        n = np.linalg.norm(self.axis)
        if abs(n - 1.0) > 1e-9:
            raise ValueError("joint axis must be a unit vector")


@dataclass(frozen=True)
class ArmModel:
    joints: tuple
    links: tuple  # per-link InertialParams, in link frames
    gravity: np.ndarray
    tau_min: np.ndarray
    tau_max: np.ndarray
    ee_offset: np.ndarray  # end-effector point in the terminal link frame

    def __post_init__(self):
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))
        object.__setattr__(self, "tau_min", np.asarray(self.tau_min, dtype=float))
        object.__setattr__(self, "tau_max", np.asarray(self.tau_max, dtype=float))
        object.__setattr__(self, "ee_offset", np.asarray(self.ee_offset, dtype=float))
        if len(self.joints) != len(self.links):
            raise ValueError("need one inertial parameter set per joint/link")
        for i, link in enumerate(self.links):
            rep = check_consistency(link)
            if not rep.ok:
                raise ValueError(f"link {i} params inconsistent: {rep.violations}")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def with_object(self, obj: InertialParams | None) -> "ArmModel":
        """Rigidly attach an object (params in the EE frame) to the last link."""
        if obj is None:
            return self
        moved = translate_params(obj, self.ee_offset)
        links = list(self.links)
        links[-1] = compose_params(links[-1], moved)
        return replace(self, links=tuple(links))

    def extract_object(self, obj: InertialParams) -> "ArmModel":
        """Inverse of with_object: remove a previously attached object."""
        moved = translate_params(obj, self.ee_offset)
        links = list(self.links)
        last = links[-1]
        links[-1] = InertialParams(
            last.mass - moved.mass,
            last.first_moment - moved.first_moment,
            last.inertia - moved.inertia,
        )
        return replace(self, links=tuple(links))


def load_arm_model(path: str | Path) -> ArmModel:
    """Read an arm description from a JSON fixture file."""
    with open(path) as f:
        raw = json.load(f)
    joints = tuple(
        Joint(np.array(j["axis"], float), np.array(j["offset"], float))
        for j in raw["joints"]
    )
    links = tuple(
        InertialParams(
            float(l["mass"]),
            np.array(l["first_moment"], float),
            np.array(l["inertia"], float),
        )
        for l in raw["links"]
    )
    return ArmModel(
        joints=joints,
        links=links,
        gravity=np.array(raw["gravity"], float),
        tau_min=np.array(raw["tau_min"], float),
        tau_max=np.array(raw["tau_max"], float),
        ee_offset=np.array(raw["ee_offset"], float),
    )


def save_arm_model(arm: ArmModel, path: str | Path) -> None:
    raw = {
        "gravity": arm.gravity.tolist(),
        "tau_min": arm.tau_min.tolist(),
        "tau_max": arm.tau_max.tolist(),
        "ee_offset": arm.ee_offset.tolist(),
        "joints": [
            {"axis": j.axis.tolist(), "offset": j.offset.tolist()} for j in arm.joints
        ],
        "links": [
            {
                "mass": l.mass,
                "first_moment": l.first_moment.tolist(),
                "inertia": l.inertia.tolist(),
            }
            for l in arm.links
        ],
    }
    Path(path).write_text(json.dumps(raw, indent=2) + "\n")


def _rotation_about(axis: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices, batched over q (... -> (..., 3, 3))."""
    q = np.asarray(q, dtype=float)
    ax = np.asarray(axis, dtype=float)
    k = np.array(
        [[0.0, -ax[2], ax[1]], [ax[2], 0.0, -ax[0]], [-ax[1], ax[0], 0.0]]
    )
    k2 = k @ k
    s = np.sin(q)[..., None, None]
    c = (1.0 - np.cos(q))[..., None, None]
    return np.eye(3) + s * k + c * k2


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Hand-rolled last-axis cross product; np.cross spends most of its time
    # normalizing axes, which dominates on the small arrays used here.
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast(a0, b0).shape + (3,))
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def _mv(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Batched matrix @ vector on trailing axes."""
    return (mat @ vec[..., None])[..., 0]


class _Kinematics:
    """World-frame chain kinematics shared by the dynamics passes.

    Shapes: every quantity carries the batch shape of q as leading axes,
    e.g. R[i] is (..., 3, 3) and s[i] is (..., 3).
    """

    def __init__(self, arm: ArmModel, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        n = arm.n_joints
        batch = q.shape[:-1]
        self.batch = batch
        self.R = []  # link orientation
        self.o = []  # link origin
        self.d = []  # origin step from parent, world frame
        self.s = []  # world joint axis
        r_parent = None  # None encodes identity at the base
        o_parent = np.zeros(batch + (3,))
        for i in range(n):
            jnt = arm.joints[i]
            local = _rotation_about(jnt.axis, q[..., i])
            if r_parent is None:
                d = np.broadcast_to(jnt.offset, batch + (3,))
                s = np.broadcast_to(jnt.axis, batch + (3,))
                r = local
            else:
                d = _mv(r_parent, np.broadcast_to(jnt.offset, batch + (3,)))
                s = _mv(r_parent, np.broadcast_to(jnt.axis, batch + (3,)))
                r = r_parent @ local
            o = o_parent + d
            self.R.append(r)
            self.o.append(o)
            self.d.append(d)
            self.s.append(s)
            r_parent, o_parent = r, o

    def ee_position(self, arm: ArmModel) -> np.ndarray:
        return self.o[-1] + _mv(self.R[-1], np.broadcast_to(arm.ee_offset, self.batch + (3,)))


def _world_link_params(arm: ArmModel, kin: _Kinematics, links=None):
    """Rotate per-link (m, h, I) into world axes. links overrides arm.links."""
    links = arm.links if links is None else links
    out = []
    for i, p in enumerate(links):
        r = kin.R[i]
        if isinstance(p, InertialParams):
            m = p.mass
            h = _mv(r, np.broadcast_to(p.first_moment, kin.batch + (3,)))
            imat = inertia_vec_to_mat(p.inertia)
            iw = r @ imat @ np.swapaxes(r, -1, -2)
        else:
            # batched terminal link: p = (mass (...,), h (..., 3), I (..., 3, 3))
            m, h_local, i_local = p
            h = _mv(r, h_local)
            iw = r @ i_local @ np.swapaxes(r, -1, -2)
        out.append((m, h, iw))
    return out


def _velocity_pass(arm, kin, q_dot):
    n = arm.n_joints
    batch = kin.batch
    omega = []
    w = np.zeros(batch + (3,))
    for i in range(n):
        w = w + kin.s[i] * q_dot[..., i : i + 1]
        omega.append(w)
    return omega


def _accel_pass(arm, kin, omega, q_dot, q_ddot, base_accel):
    """Origin accelerations and angular accelerations down the chain."""
    n = arm.n_joints
    batch = kin.batch
    a_par = np.broadcast_to(base_accel, batch + (3,))
    wd_par = np.zeros(batch + (3,))
    w_par = np.zeros(batch + (3,))
    acc, wdot = [], []
    for i in range(n):
        d = kin.d[i]
        a = a_par + _cross(wd_par, d) + _cross(w_par, _cross(w_par, d))
        wd = wd_par + kin.s[i] * q_ddot[..., i : i + 1]
        if q_dot is not None:
            wd = wd + _cross(w_par, kin.s[i]) * q_dot[..., i : i + 1]
        acc.append(a)
        wdot.append(wd)
        a_par, wd_par = a, wd
        w_par = omega[i]
    return acc, wdot


def _backward_pass(arm, kin, params_w, omega, acc, wdot):
    """Accumulate link wrenches into joint torques."""
    n = arm.n_joints
    batch = kin.batch
    f_child = np.zeros(batch + (3,))
    n_child = np.zeros(batch + (3,))
    o_child = None
    tau = [None] * n
    for i in reversed(range(n)):
        m, h, iw = params_w[i]
        w = omega[i]
        fi = (
            m * acc[i] if np.isscalar(m) else m[..., None] * acc[i]
        ) + _cross(wdot[i], h) + _cross(w, _cross(w, h))
        ni = _mv(iw, wdot[i]) + _cross(w, _mv(iw, w)) + _cross(h, acc[i])
        f_total = fi + f_child
        n_total = ni + n_child
        if o_child is not None:
            n_total = n_total + _cross(o_child - kin.o[i], f_child)
        tau[i] = (kin.s[i] * n_total).sum(axis=-1)
        f_child, n_child, o_child = f_total, n_total, kin.o[i]
    return np.stack(tau, axis=-1)


def _rnea(arm, kin, params_w, q_dot, q_ddot, with_gravity=True):
    base_accel = -arm.gravity if with_gravity else np.zeros(3)
    omega = (
        _velocity_pass(arm, kin, q_dot)
        if q_dot is not None
        else [np.zeros(kin.batch + (3,))] * arm.n_joints
    )
    acc, wdot = _accel_pass(arm, kin, omega, q_dot, q_ddot, base_accel)
    return _backward_pass(arm, kin, params_w, omega, acc, wdot)


def mass_matrix(arm: ArmModel, q: np.ndarray, kin=None, params_w=None) -> np.ndarray:
    """Joint-space mass matrix via unit-acceleration Newton-Euler columns."""
    q = np.asarray(q, dtype=float)
    n = arm.n_joints
    if kin is None:
        kin = _Kinematics(arm, q)
    if params_w is None:
        params_w = _world_link_params(arm, kin)
    batch = kin.batch
    # Stack the n unit-acceleration problems on a leading axis.
    eye = np.eye(n).reshape((n,) + (1,) * len(batch) + (n,))
    qdd = np.broadcast_to(eye, (n,) + batch + (n,))
    kin_b = _BroadcastKin(kin, n)
    params_b = [
        (
            m if np.isscalar(m) else np.broadcast_to(m, (n,) + batch),
            np.broadcast_to(h, (n,) + batch + (3,)),
            np.broadcast_to(iw, (n,) + batch + (3, 3)),
        )
        for (m, h, iw) in params_w
    ]
    cols = _rnea(arm, kin_b, params_b, None, qdd, with_gravity=False)
    # cols[j] is the torque vector for unit qdd_j -> column j of M.
    mmat = np.moveaxis(cols, 0, -1)
    return 0.5 * (mmat + np.swapaxes(mmat, -1, -2))


class _BroadcastKin:
    """View of a _Kinematics with an extra leading axis (for unit-accel passes)."""

    def __init__(self, kin: _Kinematics, lead: int):
        self.batch = (lead,) + kin.batch
        self.R = [np.broadcast_to(r, (lead,) + r.shape) for r in kin.R]
        self.o = [np.broadcast_to(o, (lead,) + o.shape) for o in kin.o]
        self.d = [np.broadcast_to(d, (lead,) + d.shape) for d in kin.d]
        self.s = [np.broadcast_to(s, (lead,) + s.shape) for s in kin.s]


def crba_mass_matrix(arm: ArmModel, kin: _Kinematics, params_w) -> np.ndarray:
    """Mass matrix by composite-rigid-body accumulation (world frame).

    Equivalent to the unit-acceleration Newton-Euler columns but with far
    fewer array operations; used on the hot rollout path.
    """
    n = arm.n_joints
    batch = kin.batch
    eye3 = np.eye(3)
    # Composite subtree params about each link origin, accumulated tip-down.
    comp = [None] * n
    m_c, h_c, i_c = params_w[n - 1]
    if np.isscalar(m_c):
        m_c = np.broadcast_to(np.float64(m_c), batch)
    comp[n - 1] = (m_c, h_c, i_c)
    for i in range(n - 2, -1, -1):
        m_i, h_i, i_i = params_w[i]
        if np.isscalar(m_i):
            m_i = np.broadcast_to(np.float64(m_i), batch)
        m_ch, h_ch, i_ch = comp[i + 1]
        d = kin.o[i + 1] - kin.o[i]
        dh = (d * h_ch).sum(axis=-1)[..., None, None]
        dd = (d * d).sum(axis=-1)[..., None, None]
        outer_dd = d[..., :, None] * d[..., None, :]
        outer_dh = d[..., :, None] * h_ch[..., None, :]
        shift = (
            m_ch[..., None, None] * (dd * eye3 - outer_dd)
            + 2.0 * dh * eye3
            - outer_dh
            - np.swapaxes(outer_dh, -1, -2)
        )
        comp[i] = (m_i + m_ch, h_i + h_ch + m_ch[..., None] * d, i_i + i_ch + shift)
    mmat = np.zeros(batch + (n, n))
    for i in range(n):
        _, h_ci, i_ci = comp[i]
        f = _cross(kin.s[i], h_ci)
        nt = _mv(i_ci, kin.s[i])
        mmat[..., i, i] = (kin.s[i] * nt).sum(axis=-1)
        for j in range(i):
            arm_vec = kin.o[i] - kin.o[j]
            tau_j = (kin.s[j] * (nt + _cross(arm_vec, f))).sum(axis=-1)
            mmat[..., j, i] = tau_j
            mmat[..., i, j] = tau_j
    return mmat


def bias_forces(arm: ArmModel, q, q_dot, kin=None, params_w=None) -> np.ndarray:
    """Coriolis, centrifugal, and gravity torques b(q, q_dot)."""
    q = np.asarray(q, dtype=float)
    q_dot = np.asarray(q_dot, dtype=float)
    if kin is None:
        kin = _Kinematics(arm, q)
    if params_w is None:
        params_w = _world_link_params(arm, kin)
    zero = np.zeros_like(q_dot)
    return _rnea(arm, kin, params_w, q_dot, zero, with_gravity=True)


def arm_inverse_dynamics(
    arm: ArmModel,
    q: np.ndarray,
    q_dot: np.ndarray,
    q_ddot: np.ndarray,
    obj: InertialParams | None = None,
) -> np.ndarray:
    """Joint torques realizing q_ddot at (q, q_dot), object included if given."""
    model = arm.with_object(obj)
    q = np.asarray(q, float)
    if q.shape[-1] != model.n_joints:
        raise ValueError("joint vector length mismatch")
    kin = _Kinematics(model, q)
    params_w = _world_link_params(model, kin)
    return _rnea(model, kin, params_w, np.asarray(q_dot, float), np.asarray(q_ddot, float))


def arm_forward_dynamics(
    arm: ArmModel,
    q: np.ndarray,
    q_dot: np.ndarray,
    tau: np.ndarray,
    obj: InertialParams | None = None,
) -> np.ndarray:
    """Joint accelerations M(q)^-1 (tau - b(q, q_dot))."""
    model = arm.with_object(obj)
    q = np.asarray(q, float)
    if q.shape[-1] != model.n_joints:
        raise ValueError("joint vector length mismatch")
    kin = _Kinematics(model, q)
    params_w = _world_link_params(model, kin)
    m = mass_matrix(model, q, kin, params_w)
    b = bias_forces(model, q, np.asarray(q_dot, float), kin, params_w)
    rhs = np.asarray(tau, float) - b
    return np.linalg.solve(m, rhs[..., None])[..., 0]


def point_jacobian(arm: ArmModel, q: np.ndarray, point_local: np.ndarray, link: int | None = None):
    """Translational Jacobian of a point fixed to a link (world frame, 3 x n)."""
    link = arm.n_joints - 1 if link is None else link
    kin = _Kinematics(arm, q)
    p = kin.o[link] + kin.R[link] @ np.asarray(point_local, float)
    jac = np.zeros((3, arm.n_joints))
    for i in range(link + 1):
        jac[:, i] = np.cross(kin.s[i], p - kin.o[i])
    return jac, p


def point_state(
    arm: ArmModel,
    q: np.ndarray,
    q_dot: np.ndarray,
    q_ddot: np.ndarray,
    point_local: np.ndarray,
    link: int | None = None,
):
    """Position, velocity, and acceleration of a link-fixed point (no gravity).

    Passing q_ddot = 0 yields the Jacobian-rate bias Jdot @ q_dot in the
    acceleration slot.
    """
    link = arm.n_joints - 1 if link is None else link
    kin = _Kinematics(arm, q)
    omega = _velocity_pass(arm, kin, np.asarray(q_dot, float))
    acc, wdot = _accel_pass(
        arm, kin, omega, np.asarray(q_dot, float), np.asarray(q_ddot, float), np.zeros(3)
    )
    r = kin.R[link]
    rel = r @ np.asarray(point_local, float)
    p = kin.o[link] + rel
    w = omega[link]
    v = _velocity_of_origin(arm, kin, omega, link) + np.cross(w, rel)
    a = acc[link] + np.cross(wdot[link], rel) + np.cross(w, np.cross(w, rel))
    return p, v, a


def _velocity_of_origin(arm, kin, omega, link):
    v = np.zeros(3)
    w_par = np.zeros(3)
    for i in range(link + 1):
        v = v + np.cross(w_par, kin.d[i])
        w_par = omega[i]
    return v


def gravity_torques(arm: ArmModel, q: np.ndarray, obj: InertialParams | None = None):
    model = arm.with_object(obj)
    zero = np.zeros(model.n_joints)
    return arm_inverse_dynamics(arm, q, zero, zero, obj)


def total_energy(arm: ArmModel, q, q_dot, obj: InertialParams | None = None) -> float:
    """Kinetic plus gravitational potential energy of the chain."""
    model = arm.with_object(obj)
    q = np.asarray(q, float)
    q_dot = np.asarray(q_dot, float)
    kin = _Kinematics(model, q)
    params_w = _world_link_params(model, kin)
    m = mass_matrix(model, q, kin, params_w)
    kinetic = 0.5 * q_dot @ m @ q_dot
    potential = 0.0
    for i, (mass, h, _) in enumerate(params_w):
        com_world = kin.o[i] + h / mass
        potential -= mass * np.dot(model.gravity, com_world)
    return float(kinetic + potential)


class BatchedArmDynamics:
    """Forward dynamics for a batch of candidate terminal-link compositions.

    The arm geometry and the parameters of links 0..n-2 are shared; the
    terminal link differs per batch element (different grasped-object
    hypotheses). States and torques carry a leading batch axis.
    """

    def __init__(self, arm: ArmModel, objects: list[InertialParams | None]):
        self.arm = arm
        self.batch = len(objects)
        masses, moments, inertias = [], [], []
        for obj in objects:
            composed = arm.with_object(obj).links[-1]
            masses.append(composed.mass)
            moments.append(composed.first_moment)
            inertias.append(inertia_vec_to_mat(composed.inertia))
        self._term_mass = np.array(masses)
        self._term_h = np.array(moments)
        self._term_imat = np.array(inertias)

    def _links(self):
        links = list(self.arm.links[:-1])
        links.append((self._term_mass, self._term_h, self._term_imat))
        return links

    def forward(self, q: np.ndarray, q_dot: np.ndarray, tau: np.ndarray) -> np.ndarray:
        """q, q_dot, tau: (batch, n) -> accelerations (batch, n)."""
        kin = _Kinematics(self.arm, q)
        params_w = _world_link_params(self.arm, kin, links=self._links())
        m = crba_mass_matrix(self.arm, kin, params_w)
        b = bias_forces(self.arm, q, q_dot, kin, params_w)
        return np.linalg.solve(m, (tau - b)[..., None])[..., 0]
