"""Cart-pole models of the wheeled balancing base.

Two related models live here:

* ``cartpole_linearize`` returns the reduced-order state-space matrices in
  the mass-ratio-simplified form used by the coupling math. Its nonlinear
  companion ``simplified_dynamics`` is the sin-extension of the same
  equations, so the two are mutually consistent under finite differencing.
* ``consistent_linearize`` keeps the full base/pendulum coupling. The LQR
  gain table is synthesized on this model because the simplified form has a
  structurally uncontrollable drift mode (B is parallel to the pitch column
  of A, which pins an invariant combination x_dot + h*theta_dot); see the
  balance controller notes in teleop.py.

State ordering everywhere: [x_w, x_w_dot, theta_R, theta_R_dot].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CartPoleParams:
    base_mass: float  # M, kg
    pend_mass: float  # m, kg
    height: float  # h, m
    gravity: float = 9.81

    def __post_init__(self):
        if not (self.base_mass > 0 and self.pend_mass > 0 and self.height > 0):
            raise ValueError("masses and height must be positive")

    @property
    def alpha_sq(self) -> float:
        """Base-to-pendulum mass ratio alpha^2 = M / m."""
        return self.base_mass / self.pend_mass

    @property
    def omega(self) -> float:
        """Pendulum natural frequency sqrt(g / h)."""
        return np.sqrt(self.gravity / self.height)

    def with_height(self, h: float) -> "CartPoleParams":
        return CartPoleParams(self.base_mass, self.pend_mass, h, self.gravity)


@dataclass
class CartPoleState:
    x_w: float = 0.0
    x_w_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.x_w, self.x_w_dot, self.theta, self.theta_dot])

    @staticmethod
    def from_vector(v: np.ndarray) -> "CartPoleState":
        return CartPoleState(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


def cartpole_linearize(p: CartPoleParams):
    """Reduced-model (A, B, B_ext) with the m >> M simplification baked in.

    A[1][2] = -(m/M) g, A[3][2] = m g / (M h); wheel force enters as
    B = [0, 1/M, 0, -1/(M h)]; an external force at the pendulum CoM enters
    as B_ext = [0, 0, 0, 1/(m h)].
    """
    m, bm, h, g = p.pend_mass, p.base_mass, p.height, p.gravity
    a = np.zeros((4, 4))
    a[0, 1] = 1.0
    a[2, 3] = 1.0
    a[1, 2] = -(m / bm) * g
    a[3, 2] = m * g / (bm * h)
    b = np.array([0.0, 1.0 / bm, 0.0, -1.0 / (bm * h)])
    b_ext = np.array([0.0, 0.0, 0.0, 1.0 / (m * h)])
    return a, b, b_ext


def simplified_dynamics(p: CartPoleParams, state: np.ndarray, u: float, f_ext: float = 0.0):
    """Nonlinear companion of cartpole_linearize (sin-extended pitch terms)."""
    m, bm, h, g = p.pend_mass, p.base_mass, p.height, p.gravity
    x, xd, th, thd = state
    s = np.sin(th)
    xdd = -(m / bm) * g * s + u / bm
    thdd = m * g * s / (bm * h) - u / (bm * h) + f_ext / (m * h)
    return np.array([xd, xdd, thd, thdd])


def consistent_linearize(p: CartPoleParams):
    """Full-coupling linearization (no mass-ratio simplification).

    Differs from cartpole_linearize only in the pitch gravity entry:
    A[3][2] = (M + m) g / (M h).
    """
    m, bm, h, g = p.pend_mass, p.base_mass, p.height, p.gravity
    a = np.zeros((4, 4))
    a[0, 1] = 1.0
    a[2, 3] = 1.0
    a[1, 2] = -(m / bm) * g
    a[3, 2] = (bm + m) * g / (bm * h)
    b = np.array([0.0, 1.0 / bm, 0.0, -1.0 / (bm * h)])
    b_ext = np.array([0.0, 0.0, 0.0, 1.0 / (m * h)])
    return a, b, b_ext


@dataclass(frozen=True)
class PendulumLoad:
    """Point load rigidly carried by the pendulum body.

    Offset is expressed in the pendulum body frame at zero pitch:
    ``forward`` is horizontal (world +x at theta = 0), ``upward`` is along
    the pendulum axis from the wheel axle.
    """

    mass: float
    forward: float
    upward: float


def full_dynamics(
    p: CartPoleParams,
    state: np.ndarray,
    u: float,
    f_ext: float = 0.0,
    load: PendulumLoad | None = None,
    f_base: float = 0.0,
):
    """Lagrangian cart-pole with an optional rigidly carried point load.

    The pendulum is a point mass m at height h along the body axis; the load
    (mass m_o at body-frame offset (forward, upward)) models a grasped object
    held by the arm. ``u`` and ``f_base`` are horizontal forces on the base,
    ``f_ext`` is a horizontal force at the pendulum CoM.

    Derived from the 2-DoF Lagrangian in (x, theta); with the load, the
    object's gravity moment -m_o*g*(world forward offset) enters the pitch
    balance exactly as the equilibrium-pitch moment equation expects.
    """
    m, bm, h, g = p.pend_mass, p.base_mass, p.height, p.gravity
    x, xd, th, thd = state
    sth, cth = np.sin(th), np.cos(th)
    if load is not None and load.mass > 0:
        mo = load.mass
        bx, bz = load.forward, load.upward
        rho_x = bz * sth + bx * cth  # world forward offset of the load
        drho_x = bz * cth - bx * sth  # d(rho_x)/dtheta
        drho_z = -bz * sth - bx * cth
    else:
        mo = 0.0
        rho_x = drho_x = drho_z = 0.0
    m11 = bm + m + mo
    m12 = m * h * cth + mo * drho_x
    m22 = m * h * h + mo * (drho_x * drho_x + drho_z * drho_z)
    dm12 = -m * h * sth + mo * drho_z  # d(m12)/dtheta
    # Generalized forces: u and f_base on x; f_ext at pendulum CoM; gravity
    # torque on theta is +m g h sin(theta) + m_o g rho_x (load held forward
    # pitches the body forward).
    q_x = u + f_base + f_ext
    q_th = f_ext * h * cth
    rhs_x = q_x - dm12 * thd * thd
    rhs_th = q_th + m * g * h * sth + mo * g * rho_x
    det = m11 * m22 - m12 * m12
    xdd = (m22 * rhs_x - m12 * rhs_th) / det
    thdd = (m11 * rhs_th - m12 * rhs_x) / det
    return np.array([xd, xdd, thd, thdd])


def step_cartpole(p, state, u, dt, f_ext=0.0, load=None, f_base=0.0):
    """Semi-implicit Euler step of full_dynamics."""
    deriv = full_dynamics(p, state, u, f_ext, load, f_base)
    xd = state[1] + dt * deriv[1]
    thd = state[3] + dt * deriv[3]
    x = state[0] + dt * xd
    th = state[2] + dt * thd
    return np.array([x, xd, th, thd])
