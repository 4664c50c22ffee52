"""Deterministic, batchable rollout engine.

A PD-controlled arm (optionally holding a candidate object) is integrated
with semi-implicit Euler at fixed dt, with viscous joint friction and an
integer actuation delay. Rollouts are pure functions of their inputs; the
batched path evaluates every candidate with elementwise array operations, so
results are bitwise-identical for any batch composition and worker count.

Trajectory files are JSON Lines, one record per step:
``{"t": ..., "q": [...], "qd": [...], "tau": [...]}``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arm import ArmModel, BatchedArmDynamics
from .inertial import InertialParams

QD_DIVERGENCE_LIMIT = 1e3  # rad/s


class DivergedRollout(RuntimeError):
    """Raised (or recorded per batch element) when a rollout blows up."""

    def __init__(self, step: int):
        super().__init__(f"rollout diverged at step {step}")
        self.step = step


@dataclass(frozen=True)
class RolloutFailure:
    """Per-element divergence marker returned by batch_rollout."""

    step: int


@dataclass
class Trajectory:
    """Uniformly sampled joint trajectory. tau holds commanded torques."""

    timestamps: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    tau: np.ndarray | None = None

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.qd = np.asarray(self.qd, dtype=float)
        if self.tau is not None:
            self.tau = np.asarray(self.tau, dtype=float)
        t = self.timestamps
        if len(t) != len(self.q) or len(t) != len(self.qd):
            raise ValueError("timestamps, q, qd must have equal length")
        if len(t) >= 2:
            steps = np.diff(t)
            if not np.allclose(steps, steps[0], rtol=0, atol=1e-9):
                raise ValueError("timestamps must be uniformly spaced")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def dt(self) -> float:
        return float(self.timestamps[1] - self.timestamps[0])

    def slice(self, start: int, stop: int) -> "Trajectory":
        tau = None if self.tau is None else self.tau[start:stop]
        return Trajectory(self.timestamps[start:stop], self.q[start:stop], self.qd[start:stop], tau)


def save_trajectory(traj: Trajectory, path: str | Path) -> None:
    with open(path, "w") as f:
        for i in range(len(traj)):
            rec = {
                "t": traj.timestamps[i],
                "q": traj.q[i].tolist(),
                "qd": traj.qd[i].tolist(),
            }
            if traj.tau is not None:
                rec["tau"] = traj.tau[i].tolist()
            f.write(json.dumps(rec) + "\n")


def load_trajectory(path: str | Path) -> Trajectory:
    ts, qs, qds, taus = [], [], [], []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            ts.append(rec["t"])
            qs.append(rec["q"])
            qds.append(rec["qd"])
            if "tau" in rec:
                taus.append(rec["tau"])
    tau = np.array(taus) if len(taus) == len(ts) and taus else None
    return Trajectory(np.array(ts), np.array(qs), np.array(qds), tau)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.002
    kp: np.ndarray = field(default_factory=lambda: np.array([30.0, 30.0, 30.0, 20.0]))
    kd: np.ndarray = field(default_factory=lambda: np.array([1.5, 1.5, 1.5, 1.0]))
    friction: np.ndarray = field(default_factory=lambda: np.zeros(4))
    latency_steps: int = 0
    horizon: int = 1000
    gain_scale: np.ndarray | None = None  # multiplicative, for sysid

    def __post_init__(self):
        object.__setattr__(self, "kp", np.asarray(self.kp, dtype=float))
        object.__setattr__(self, "kd", np.asarray(self.kd, dtype=float))
        object.__setattr__(self, "friction", np.asarray(self.friction, dtype=float))
        if self.gain_scale is not None:
            object.__setattr__(self, "gain_scale", np.asarray(self.gain_scale, dtype=float))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.latency_steps < 0:
            raise ValueError("latency_steps must be non-negative")
        if np.any(self.kp < 0) or np.any(self.kd < 0) or np.any(self.friction < 0):
            raise ValueError("gains and friction must be non-negative")

    def effective_gains(self):
        if self.gain_scale is None:
            return self.kp, self.kd
        return self.kp * self.gain_scale, self.kd * self.gain_scale


class DelayLine:
    """FIFO of pending torque commands, zero-initialized."""

    def __init__(self, latency_steps: int, width: int, batch: int | None = None):
        shape = (latency_steps + 1, width) if batch is None else (latency_steps + 1, batch, width)
        self._buf = np.zeros(shape)
        self._idx = 0
        self._n = latency_steps + 1

    def push_pop(self, cmd: np.ndarray) -> np.ndarray:
        """Insert the newest command; return the one delayed by latency_steps."""
        self._buf[self._idx] = cmd
        self._idx = (self._idx + 1) % self._n
        return self._buf[self._idx].copy()


def pd_torque(q_ref, qd_ref, q, qd, kp, kd, tau_min=None, tau_max=None) -> np.ndarray:
    """PD feedback torque, clamped to the limits when given."""
    tau = kp * (np.asarray(q_ref) - np.asarray(q)) + kd * (np.asarray(qd_ref) - np.asarray(qd))
    if tau_min is not None or tau_max is not None:
        tau = np.clip(tau, tau_min, tau_max)
    return tau


def _run_batch(
    objs: list[InertialParams | None],
    reference: Trajectory,
    arm: ArmModel,
    cfg: SimConfig,
    feedforward: np.ndarray | None,
):
    """Vectorized rollout of a batch of candidate objects.

    Returns (q_hist, qd_hist, tau_hist, diverged_step) where diverged_step[i]
    is -1 for clean rollouts. Diverged elements are frozen in place so the
    rest of the batch keeps integrating on finite numbers.
    """
    steps = min(len(reference), cfg.horizon)
    nb = len(objs)
    n = arm.n_joints
    dyn = BatchedArmDynamics(arm, objs)
    kp, kd = cfg.effective_gains()
    q = np.tile(reference.q[0], (nb, 1))
    qd = np.tile(reference.qd[0], (nb, 1))
    delay = DelayLine(cfg.latency_steps, n, batch=nb)
    q_hist = np.empty((steps, nb, n))
    qd_hist = np.empty((steps, nb, n))
    tau_hist = np.empty((steps, nb, n))
    diverged = np.full(nb, -1, dtype=int)
    active = np.ones(nb, dtype=bool)
    for t in range(steps):
        q_hist[t] = q
        qd_hist[t] = qd
        cmd = kp * (reference.q[t] - q) + kd * (reference.qd[t] - qd)
        if feedforward is not None:
            cmd = cmd + feedforward[t]
        cmd = np.clip(cmd, arm.tau_min, arm.tau_max)
        tau_hist[t] = cmd
        applied = delay.push_pop(cmd)
        net = applied - cfg.friction * qd
        qdd = dyn.forward(q, qd, net)
        qd_new = qd + cfg.dt * qdd
        q_new = q + cfg.dt * qd_new
        bad = ~np.isfinite(qd_new).all(axis=1) | (
            np.abs(qd_new).max(axis=1) > QD_DIVERGENCE_LIMIT
        )
        newly = bad & active
        if newly.any():
            diverged[newly] = t
            active &= ~newly
            q_new[newly] = q[newly]
            qd_new[newly] = 0.0
        q, qd = q_new, qd_new
    return q_hist, qd_hist, tau_hist, diverged


def rollout(
    obj: InertialParams | None,
    reference: Trajectory,
    arm: ArmModel,
    cfg: SimConfig,
    feedforward: np.ndarray | None = None,
) -> Trajectory:
    """Simulate the arm holding ``obj`` while PD-tracking ``reference``.

    The rollout starts from the reference's initial state, applies PD plus
    the optional per-step feedforward through the actuation delay line,
    subtracts viscous friction, and integrates the composed forward dynamics.
    Raises DivergedRollout if any joint speed exceeds the blow-up limit.
    """
    q_hist, qd_hist, tau_hist, diverged = _run_batch([obj], reference, arm, cfg, feedforward)
    if diverged[0] >= 0:
        raise DivergedRollout(int(diverged[0]))
    steps = q_hist.shape[0]
    return Trajectory(
        reference.timestamps[:steps], q_hist[:, 0], qd_hist[:, 0], tau_hist[:, 0]
    )


def batch_rollout(
    objs: list[InertialParams | None],
    reference: Trajectory,
    arm: ArmModel,
    cfg: SimConfig,
    feedforward: np.ndarray | None = None,
    workers: int = 1,
    seed=None,
):
    """Roll out every candidate; element i equals rollout(objs[i], ...) exactly.

    Diverged elements come back as RolloutFailure markers instead of aborting
    the batch. ``workers`` only splits the batch into independently evaluated
    chunks; results are assembled by index, so the output is identical for
    any worker count. ``seed`` is accepted for interface symmetry with the
    stochastic callers; the engine itself draws no random numbers.
    """
    if not objs:
        raise ValueError("batch_rollout needs at least one candidate")
    workers = max(1, int(workers))
    chunks = np.array_split(np.arange(len(objs)), min(workers, len(objs)))
    chunks = [c for c in chunks if len(c)]

    def run(idx):
        return _run_batch([objs[i] for i in idx], reference, arm, cfg, feedforward)

    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    steps = parts[0][0].shape[0]
    ts = reference.timestamps[:steps]
    out: list = [None] * len(objs)
    for idx, (qh, qdh, tauh, div) in zip(chunks, parts):
        for k, i in enumerate(idx):
            if div[k] >= 0:
                out[i] = RolloutFailure(int(div[k]))
            else:
                out[i] = Trajectory(ts, qh[:, k], qdh[:, k], tauh[:, k])
    return out
