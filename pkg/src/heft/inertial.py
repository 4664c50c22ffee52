"""Rigid-body inertial parameter algebra.

A rigid body is described by 10 scalars: mass, first mass moment
h = m * com (about the body frame origin), and the 6 independent entries
of the rotational inertia tensor about the same origin, stored in the
order [Ixx, Iyy, Izz, Ixy, Iyz, Izx].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INERTIA_ORDER = ("xx", "yy", "zz", "xy", "yz", "zx")


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v] such that [v] @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def inertia_vec_to_mat(i6: np.ndarray) -> np.ndarray:
    """[xx, yy, zz, xy, yz, zx] -> symmetric 3x3 tensor."""
    xx, yy, zz, xy, yz, zx = i6
    return np.array([[xx, xy, zx], [xy, yy, yz], [zx, yz, zz]])


def inertia_mat_to_vec(mat: np.ndarray) -> np.ndarray:
    return np.array(
        [mat[0, 0], mat[1, 1], mat[2, 2], mat[0, 1], mat[1, 2], mat[2, 0]]
    )


@dataclass(frozen=True)
class InertialParams:
    """10-parameter description of a rigid body about its frame origin."""

    mass: float
    first_moment: np.ndarray  # h = m * com, kg*m
    inertia: np.ndarray  # [Ixx, Iyy, Izz, Ixy, Iyz, Izx] about origin, kg*m^2

    def __post_init__(self):
        object.__setattr__(
            self, "first_moment", np.asarray(self.first_moment, dtype=float)
        )
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        if self.first_moment.shape != (3,):
            raise ValueError("first_moment must be a 3-vector")
        if self.inertia.shape != (6,):
            raise ValueError("inertia must be 6 scalars [xx,yy,zz,xy,yz,zx]")

    @property
    def com(self) -> np.ndarray:
        return self.first_moment / self.mass

    @property
    def inertia_matrix(self) -> np.ndarray:
        return inertia_vec_to_mat(self.inertia)

    def as_vector(self) -> np.ndarray:
        """phi = [m, hx, hy, hz, Ixx, Iyy, Izz, Ixy, Iyz, Izx]."""
        return np.concatenate(([self.mass], self.first_moment, self.inertia))

    @staticmethod
    def from_vector(phi: np.ndarray) -> "InertialParams":
        phi = np.asarray(phi, dtype=float)
        return InertialParams(float(phi[0]), phi[1:4].copy(), phi[4:10].copy())

    @staticmethod
    def from_mass_com(mass: float, com: np.ndarray, inertia6: np.ndarray) -> "InertialParams":
        com = np.asarray(com, dtype=float)
        return InertialParams(float(mass), mass * com, np.asarray(inertia6, float))


@dataclass
class ConsistencyReport:
    ok: bool
    violations: list = field(default_factory=list)
    principal_moments: np.ndarray | None = None


def com_frame_inertia(p: InertialParams) -> np.ndarray:
    """Inertia tensor about the center of mass (parallel-axis removal)."""
    c = p.com
    shift = p.mass * (np.dot(c, c) * np.eye(3) - np.outer(c, c))
    return p.inertia_matrix - shift


def check_consistency(p: InertialParams, tol: float = 1e-12) -> ConsistencyReport:
    """Check mass positivity, finite CoM, and the principal-moment constraints.

    The CoM-frame inertia must have positive principal moments J1, J2, J3
    satisfying J1 + J2 + J3 >= 2*Jk for every k (triangle inequality).
    """
    violations = []
    if not p.mass > 0:
        violations.append("mass: m > 0")
        return ConsistencyReport(False, violations)
    if not np.all(np.isfinite(p.com)):
        violations.append("com: finite")
        return ConsistencyReport(False, violations)
    ic = com_frame_inertia(p)
    if not np.all(np.isfinite(ic)):
        violations.append("inertia: finite")
        return ConsistencyReport(False, violations)
    j = np.linalg.eigvalsh(0.5 * (ic + ic.T))
    for k, jk in enumerate(j):
        if not jk > tol * max(1.0, abs(j).max()):
            violations.append(f"principal_moment: J{k + 1} > 0")
    s = j.sum()
    for k, jk in enumerate(j):
        if s - 2.0 * jk < -tol * max(1.0, s):
            violations.append(f"triangle: J1+J2+J3 >= 2*J{k + 1}")
    return ConsistencyReport(len(violations) == 0, violations, j)


@dataclass(frozen=True)
class CuboidGeom:
    """Cuboid of size [a, b, c] with the CoM offset from the geometric centroid."""

    size: np.ndarray
    com_offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "size", np.asarray(self.size, dtype=float))
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float))
        if self.size.shape != (3,) or self.com_offset.shape != (3,):
            raise ValueError("size and com_offset must be 3-vectors")
        if not np.all(self.size > 0):
            raise ValueError("cuboid dimensions must be positive")
        if np.any(np.abs(self.com_offset) > self.size / 2 + 1e-12):
            raise ValueError("com_offset must lie inside the cuboid")


def cuboid_inertia(mass: float, geom: CuboidGeom) -> InertialParams:
    """Inertial parameters of a cuboid-shaped body about its centroid frame.

    The rotational terms are the uniform-cuboid CoM inertia plus the
    parallel-axis contribution of the CoM offset; the products of inertia
    come entirely from the offset (Ixy = -m*hx*hy and cyclic).
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    a, b, c = geom.size
    hx, hy, hz = geom.com_offset
    ixx = mass * (b * b + c * c) / 12.0 + mass * (hy * hy + hz * hz)
    iyy = mass * (a * a + c * c) / 12.0 + mass * (hx * hx + hz * hz)
    izz = mass * (a * a + b * b) / 12.0 + mass * (hx * hx + hy * hy)
    ixy = -mass * hx * hy
    iyz = -mass * hy * hz
    izx = -mass * hz * hx
    return InertialParams(
        mass, mass * geom.com_offset, np.array([ixx, iyy, izz, ixy, iyz, izx])
    )


def translate_params(p: InertialParams, d: np.ndarray) -> InertialParams:
    """Re-express params about a new origin O' = O - d.

    Positions measured from the new origin are r' = r + d, so the CoM moves
    to com + d and the inertia picks up parallel-axis and cross terms.
    """
    d = np.asarray(d, dtype=float)
    h = p.first_moment
    i_old = p.inertia_matrix
    cross = (
        p.mass * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
        + 2.0 * np.dot(d, h) * np.eye(3)
        - np.outer(h, d)
        - np.outer(d, h)
    )
    return InertialParams(p.mass, h + p.mass * d, inertia_mat_to_vec(i_old + cross))


def compose_params(a: InertialParams, b: InertialParams) -> InertialParams:
    """Combine two bodies expressed about the same origin into one."""
    return InertialParams(
        a.mass + b.mass, a.first_moment + b.first_moment, a.inertia + b.inertia
    )


def subtract_params(a: InertialParams, b: InertialParams) -> InertialParams:
    """Inverse of compose_params: remove body b from the composite a."""
    return InertialParams(
        a.mass - b.mass, a.first_moment - b.first_moment, a.inertia - b.inertia
    )


def _angular_column_map(w: np.ndarray) -> np.ndarray:
    """L(w) such that L(w) @ i6 == inertia_mat(i6) @ w."""
    wx, wy, wz = w
    return np.array(
        [
            [wx, 0.0, 0.0, wy, 0.0, wz],
            [0.0, wy, 0.0, wx, wz, 0.0],
            [0.0, 0.0, wz, 0.0, wy, wx],
        ]
    )


def newton_euler_regressor(
    a: np.ndarray, omega: np.ndarray, omega_dot: np.ndarray
) -> np.ndarray:
    """6x10 regressor Y with [f; tau] = Y @ phi for a single rigid body.

    Inputs are the body-frame proper linear acceleration of the frame origin
    (gravity included), angular velocity, and angular acceleration. The full
    regressor includes the first-moment coupling columns, so the wrench is
    exact for bodies whose CoM is away from the frame origin:

        f   = m*a + omega_dot x h + omega x (omega x h)
        tau = I*omega_dot + omega x (I*omega) + h x a
    """
    a = np.asarray(a, dtype=float)
    omega = np.asarray(omega, dtype=float)
    omega_dot = np.asarray(omega_dot, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(omega)) and np.all(np.isfinite(omega_dot))):
        raise ValueError("regressor inputs must be finite")
    sw = skew(omega)
    y = np.zeros((6, 10))
    y[0:3, 0] = a
    y[0:3, 1:4] = skew(omega_dot) + sw @ sw
    y[3:6, 1:4] = -skew(a)
    y[3:6, 4:10] = _angular_column_map(omega_dot) + sw @ _angular_column_map(omega)
    return y


def body_wrench(
    p: InertialParams, a: np.ndarray, omega: np.ndarray, omega_dot: np.ndarray
) -> np.ndarray:
    """Direct Newton-Euler wrench [f; tau] of a body about its frame origin."""
    h = p.first_moment
    imat = p.inertia_matrix
    f = p.mass * np.asarray(a, float) + np.cross(omega_dot, h) + np.cross(
        omega, np.cross(omega, h)
    )
    tau = imat @ omega_dot + np.cross(omega, imat @ omega) + np.cross(h, a)
    return np.concatenate((f, tau))
