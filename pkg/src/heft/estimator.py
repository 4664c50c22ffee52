"""Sampling-based inertial parameter estimation from proprioception.

The estimator refines a prior over (mass, CoM) by rolling candidate objects
through the simulation engine against a recorded reference trajectory and
keeping the candidates whose rollouts deviate least. Sampling is
hierarchical: mass and CoM are drawn from an adapted Gaussian, the cuboid
size is anchored per hypothesis at initialization, and the inertia tensor is
recomputed deterministically from (mass, size, CoM), which keeps every
candidate physically consistent. Several independent hypothesis seeds run
side by side and only compete at the final argmin, which protects against a
badly wrong prior collapsing the search to the wrong mode.

A classical constrained least-squares baseline over wrench measurements is
included for comparison, implemented through an unconstrained
reparameterization that enforces positivity and the principal-moment
triangle inequality by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .arm import ArmModel
from .inertial import InertialParams, com_frame_inertia, inertia_mat_to_vec
from .priors import HypothesisSeed, PriorBundle, multi_hypothesis_init, synthesize_params
from .simengine import RolloutFailure, SimConfig, Trajectory, batch_rollout

MASS_FLOOR = 1e-3  # kg, truncation for sampled masses
VAR_FLOOR = 1e-8  # covariance diagonal floor


class EstimationFailed(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"all samples diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SamplingDistribution:
    """Diagonal Gaussian over [m, cx, cy, cz] with a frozen size anchor."""

    mean: np.ndarray  # (4,)
    std: np.ndarray  # (4,) elementwise
    size: np.ndarray  # (3,) anchored cuboid size
    com_bound: np.ndarray  # (3,) CoM truncation half-widths

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean[0] <= 0:
            raise ValueError("mean mass must be positive")
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")

    @staticmethod
    def from_seed(seed: HypothesisSeed, com_halfwidth: float) -> "SamplingDistribution":
        std = np.sqrt(seed.std**2 + VAR_FLOOR)
        return SamplingDistribution(
            seed.mean.copy(), std, seed.size.copy(), com_halfwidth * seed.size
        )


@dataclass(frozen=True)
class EstimatorConfig:
    n_samples: int = 64  # per hypothesis, per iteration
    hypotheses: int = 4
    elite_frac: float = 0.25
    iterations: int = 3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.elite_frac <= 1:
            raise ValueError("elite_frac must lie in (0, 1]")
        if int(np.ceil(self.elite_frac * self.n_samples)) < 2:
            raise ValueError("elite fraction too small: need >= 2 elites per hypothesis")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class Estimate:
    params: InertialParams
    cost: float
    cost_trace: np.ndarray  # (hypotheses, iterations) best cost per round
    wall_time: float
    hypothesis: int  # which seed won
    mass_com: np.ndarray  # winning [m, cx, cy, cz]
    size: np.ndarray  # winning size anchor


def trajectory_cost(sim, ref: Trajectory) -> float:
    """Sum of squared position and velocity deviations; +inf for failures."""
    if isinstance(sim, RolloutFailure):
        return float("inf")
    if len(sim) != len(ref):
        raise ValueError("trajectory length mismatch")
    if abs(sim.dt - ref.dt) > 1e-12:
        raise ValueError("trajectory dt mismatch")
    dq = sim.q - ref.q
    dqd = sim.qd - ref.qd
    return float(np.sum(dq * dq) + np.sum(dqd * dqd))


def _trajectory_costs_batch(sims, ref: Trajectory) -> np.ndarray:
    return np.array([trajectory_cost(s, ref) for s in sims])


def _draw_samples(dist: SamplingDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    draws = rng.normal(loc=dist.mean, scale=dist.std, size=(n, 4))
    draws[:, 0] = np.maximum(draws[:, 0], MASS_FLOOR)
    draws[:, 1:] = np.clip(draws[:, 1:], -dist.com_bound, dist.com_bound)
    return draws


def _select_and_refit(
    dist: SamplingDistribution,
    draws: np.ndarray,
    costs: np.ndarray,
    n_elite: int,
    carried: tuple[np.ndarray, float] | None,
):
    pop, pop_costs = draws, costs
    if carried is not None:
        pop = np.vstack([draws, carried[0][None, :]])
        pop_costs = np.append(costs, carried[1])
    if not np.isfinite(pop_costs).any():
        raise EstimationFailed(0)
    order = np.argsort(pop_costs, kind="stable")
    elites = pop[order[:n_elite]]
    mean = elites.mean(axis=0)
    var = elites.var(axis=0) + VAR_FLOOR
    mean[0] = max(mean[0], MASS_FLOOR)
    new_dist = SamplingDistribution(mean, np.sqrt(var), dist.size, dist.com_bound)
    best = order[0]
    return new_dist, pop[best].copy(), float(pop_costs[best])


def cem_iterate(
    dist: SamplingDistribution,
    ref: Trajectory,
    arm: ArmModel,
    cfg: SimConfig,
    ecfg: EstimatorConfig,
    rng: np.random.Generator,
    n_draws: int | None = None,
    carried: tuple[np.ndarray, float] | None = None,
):
    """One sampling round: draw, roll out, select elites, refit the Gaussian.

    Samples [m, c] from the current distribution (mass truncated positive,
    CoM truncated to the anchored box), synthesizes each candidate's inertia
    from the frozen size, and scores rollouts against the reference. The
    carried (sample, cost) pair from the previous round joins the population
    without re-simulation so the best cost can never regress.

    Returns (updated distribution, best [m, c], best cost).
    """
    n = ecfg.n_samples if n_draws is None else n_draws
    draws = _draw_samples(dist, rng, n)
    candidates = [synthesize_params(d[0], dist.size, d[1:]) for d in draws]
    sims = batch_rollout(
        candidates, ref, arm, cfg, feedforward=ref.tau, workers=ecfg.workers
    )
    costs = _trajectory_costs_batch(sims, ref)
    n_elite = int(np.ceil(ecfg.elite_frac * n))
    return _select_and_refit(dist, draws, costs, n_elite, carried)


def estimate(
    bundle: PriorBundle,
    ref: Trajectory,
    arm: ArmModel,
    cfg: SimConfig,
    ecfg: EstimatorConfig,
) -> Estimate:
    """Full multi-hypothesis refinement; returns the lowest-cost candidate.

    Seeds hypotheses from the prior bundle, advances each through the
    configured number of sampling rounds on its own RNG substream, and takes
    the global argmin over the per-hypothesis champions at the end.
    """
    t0 = time.perf_counter()
    k = ecfg.hypotheses
    root = np.random.SeedSequence(ecfg.seed)
    init_seed, *iter_seeds = root.spawn(k + 1)
    bundle_k = bundle
    if bundle.hypothesis_count != k:
        bundle_k = PriorBundle(
            bundle.size, bundle.mass, bundle.com_halfwidth, k, bundle.name, bundle.ground_truth
        )
    seeds = multi_hypothesis_init(bundle_k, ecfg.n_samples, init_seed)
    per = ecfg.n_samples
    n_elite = int(np.ceil(ecfg.elite_frac * per))
    trace = np.full((k, ecfg.iterations), np.inf)
    champions: list[tuple[np.ndarray, float, np.ndarray] | None] = [None] * k
    dists = [SamplingDistribution.from_seed(s, bundle.com_halfwidth) for s in seeds]
    rngs = [np.random.default_rng(s) for s in iter_seeds]
    carried: list[tuple[np.ndarray, float] | None] = [None] * k
    alive = [True] * k
    # All hypotheses advance in lockstep so each iteration needs only one
    # batched rollout call; per-element results are independent of batch
    # composition, so this equals running cem_iterate per hypothesis.
    for it in range(ecfg.iterations):
        draws = [
            _draw_samples(dists[h], rngs[h], per) if alive[h] else None for h in range(k)
        ]
        candidates, owners = [], []
        for h in range(k):
            if draws[h] is None:
                continue
            for d in draws[h]:
                candidates.append(synthesize_params(d[0], dists[h].size, d[1:]))
                owners.append(h)
        if not candidates:
            break
        sims = batch_rollout(
            candidates, ref, arm, cfg, feedforward=ref.tau, workers=ecfg.workers
        )
        costs = _trajectory_costs_batch(sims, ref)
        owners = np.asarray(owners)
        for h in range(k):
            if draws[h] is None:
                continue
            costs_h = costs[owners == h]
            try:
                dists[h], best, best_cost = _select_and_refit(
                    dists[h], draws[h], costs_h, n_elite, carried[h]
                )
            except EstimationFailed:
                alive[h] = False
                continue
            carried[h] = (best, best_cost)
            trace[h, it] = best_cost
    for h in range(k):
        if carried[h] is not None and np.isfinite(carried[h][1]):
            champions[h] = (carried[h][0], carried[h][1], dists[h].size)
    if all(c is None for c in champions):
        raise EstimationFailed(ecfg.iterations)
    best_h = min(
        (h for h in range(k) if champions[h] is not None),
        key=lambda h: champions[h][1],
    )
    sample, cost, size = champions[best_h]
    params = synthesize_params(sample[0], size, sample[1:])
    return Estimate(
        params=params,
        cost=cost,
        cost_trace=trace,
        wall_time=time.perf_counter() - t0,
        hypothesis=best_h,
        mass_com=sample,
        size=size,
    )


# --- constrained least-squares baseline -----------------------------------

_PARAM_NAMES = ["m", "hx", "hy", "hz", "Ixx", "Iyy", "Izz", "Ixy", "Iyz", "Izx"]


class RankDeficientData(ValueError):
    def __init__(self, unobservable: list[str]):
        super().__init__(f"regressor rank-deficient; unobservable: {', '.join(unobservable)}")
        self.unobservable = unobservable


def _theta_to_phi(theta: np.ndarray) -> np.ndarray:
    """Unconstrained 10-vector -> consistent inertial parameter vector.

    theta = [log m, c (3), chol(Sigma) entries (6, log on diagonal)] where
    Sigma is the density-weighted second moment about the CoM; the CoM-frame
    inertia tr(Sigma) I - Sigma then satisfies positivity and the triangle
    inequality for any theta.
    """
    m = np.exp(theta[0])
    c = theta[1:4]
    l11, l21, l22, l31, l32, l33 = theta[4:10]
    low = np.array(
        [
            [np.exp(l11), 0.0, 0.0],
            [l21, np.exp(l22), 0.0],
            [l31, l32, np.exp(l33)],
        ]
    )
    sigma = low @ low.T
    i_com = np.trace(sigma) * np.eye(3) - sigma
    i_origin = i_com + m * (np.dot(c, c) * np.eye(3) - np.outer(c, c))
    return np.concatenate(([m], m * c, inertia_mat_to_vec(i_origin)))


def _phi_to_theta(phi: np.ndarray) -> np.ndarray:
    """Best-effort inverse of _theta_to_phi (projects to the feasible set)."""
    m = max(float(phi[0]), MASS_FLOOR)
    c = phi[1:4] / m
    params = InertialParams(m, phi[1:4], phi[4:10])
    i_com = com_frame_inertia(params)
    sigma = 0.5 * np.trace(i_com) * np.eye(3) - i_com
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
    w = np.maximum(w, 1e-9)
    sigma = v @ np.diag(w) @ v.T
    low = np.linalg.cholesky(sigma)
    return np.concatenate(
        (
            [np.log(m)],
            c,
            [
                np.log(low[0, 0]),
                low[1, 0],
                np.log(low[1, 1]),
                low[2, 0],
                low[2, 1],
                np.log(low[2, 2]),
            ],
        )
    )


def baseline_least_squares(samples: list[tuple[np.ndarray, np.ndarray]]) -> InertialParams:
    """Physically consistent LS fit of (regressor, wrench) samples.

    Stacks the per-sample 6x10 regressors, rejects rank-deficient data with
    the unobservable parameter directions named, then minimizes the wrench
    residual over the unconstrained reparameterization with a damped
    Gauss-Newton (Levenberg-Marquardt) iteration.
    """
    if not samples:
        raise ValueError("no samples")
    ys = np.vstack([y for y, _ in samples])
    ws = np.concatenate([np.asarray(w, float) for _, w in samples])
    _, sv, vt = np.linalg.svd(ys)
    rank = int((sv > sv[0] * 1e-8).sum())
    if rank < 10:
        null = vt[rank:]
        weights = np.abs(null).max(axis=0)
        unobs = [n for n, w in zip(_PARAM_NAMES, weights) if w > 1e-6]
        raise RankDeficientData(unobs)
    phi0, *_ = np.linalg.lstsq(ys, ws, rcond=None)
    theta0 = _phi_to_theta(phi0)

    def residual(theta):
        return ys @ _theta_to_phi(theta) - ws

    sol = least_squares(residual, theta0, method="lm", xtol=1e-14, ftol=1e-14)
    return InertialParams.from_vector(_theta_to_phi(sol.x))


# --- estimation trigger ----------------------------------------------------


def scan_triggers(
    window: Trajectory, low: float, high: float, smooth: int = 1
) -> list[int]:
    """Indices where smoothed joint speed rises through the hysteresis pair.

    The detector arms whenever the speed drops below ``low`` and fires once
    when it then exceeds ``high``; it stays quiet until re-armed.
    """
    if len(window) < 2:
        raise ValueError("window must contain at least 2 samples")
    speed = np.linalg.norm(window.qd, axis=1)
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        speed = np.convolve(speed, kernel, mode="same")
    armed = speed[0] < low
    hits = []
    for i, s in enumerate(speed):
        if armed and s > high:
            hits.append(i)
            armed = False
        elif not armed and s < low:
            armed = True
    return hits


def trigger_detect(window: Trajectory, low: float = 0.02, high: float = 0.1) -> bool:
    """True when the window contains a static-to-dynamic transition."""
    return len(scan_triggers(window, low, high)) > 0
