"""Size and mass priors for grasped objects, and hypothesis initialization.

Vision and language stages are replaced by fixture files carrying a cuboid
size estimate and a mass guess with uncertainty half-widths. From a bundle,
full candidate inertial parameters are synthesized hierarchically: sample
mass and CoM, anchor a cuboid size, derive the inertia tensor from the
three. Every synthesized candidate is physically consistent by construction
because the CoM stays inside the box and the inertia is built from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .inertial import CuboidGeom, InertialParams, cuboid_inertia


class PriorFileError(ValueError):
    """Raised when a prior bundle file is missing or malformed."""


@dataclass(frozen=True)
class SizeEstimate:
    size: np.ndarray  # [a, b, c] in meters
    rel_uncertainty: float

    def __post_init__(self):
        object.__setattr__(self, "size", np.asarray(self.size, dtype=float))
        if not np.all(self.size > 0):
            raise PriorFileError("size: all dimensions must be positive")
        if not 0 <= self.rel_uncertainty < 1:
            raise PriorFileError("size_rel_unc: must satisfy 0 <= delta_s < 1")


@dataclass(frozen=True)
class MassPrior:
    m_hat: float
    rel_uncertainty: float
    provenance: str = ""

    def __post_init__(self):
        if not self.m_hat > 0:
            raise PriorFileError("mass: prior mass must be positive")
        if not 0 <= self.rel_uncertainty < 1:
            raise PriorFileError("mass_rel_unc: must satisfy 0 <= delta_m < 1")


@dataclass(frozen=True)
class GroundTruth:
    """Held out of the estimator; used only for scoring."""

    params: InertialParams
    size: np.ndarray | None = None


@dataclass(frozen=True)
class PriorBundle:
    size: SizeEstimate
    mass: MassPrior
    com_halfwidth: float  # delta_h, fraction of size
    hypothesis_count: int
    name: str = ""
    ground_truth: GroundTruth | None = None

    def __post_init__(self):
        if not 0 < self.com_halfwidth <= 0.5:
            raise PriorFileError("com_halfwidth: must satisfy 0 < delta_h <= 0.5")
        if self.hypothesis_count < 1:
            raise PriorFileError("hypotheses: must be >= 1")


def mass_from_density(size: SizeEstimate, density: float, fill: float = 1.0) -> MassPrior:
    """Mass prior from a uniform-density volume guess: m = rho * fill * V."""
    if density <= 0:
        raise ValueError("density must be positive")
    if not 0 <= fill <= 1:
        raise ValueError("fill must lie in [0, 1]")
    a, b, c = size.size
    m = density * fill * a * b * c
    if m <= 0:
        raise ValueError("degenerate prior: zero mass")
    return MassPrior(m, size.rel_uncertainty, provenance=f"density {density} kg/m^3, fill {fill}")


def synthesize_params(
    mass: float, size: np.ndarray, com_offset: np.ndarray
) -> InertialParams:
    """Full inertial parameters for a cuboid candidate (CoM must be in-box)."""
    return cuboid_inertia(mass, CuboidGeom(size, com_offset))


@dataclass
class HypothesisSeed:
    """One initialization seed: its draws, size anchor, and fitted Gaussian."""

    masses: np.ndarray  # (n,)
    coms: np.ndarray  # (n, 3)
    size: np.ndarray  # anchored cuboid size, frozen afterwards
    mean: np.ndarray  # fitted mean over [m, cx, cy, cz]
    std: np.ndarray  # fitted elementwise std

    def draws(self) -> list[InertialParams]:
        return [
            synthesize_params(m, self.size, c) for m, c in zip(self.masses, self.coms)
        ]


def multi_hypothesis_init(bundle: PriorBundle, n_samples: int, rng_seed) -> list[HypothesisSeed]:
    """Draw K independent hypothesis seeds from the prior bundle.

    Each hypothesis gets floor(n_samples / K) draws from its own RNG
    substream: masses uniform in (1 +- delta_m) * m_hat, one anchored size
    uniform in (1 +- delta_s) * s shared by the hypothesis, and CoM offsets
    uniform in +-delta_h * size. The per-hypothesis Gaussian over [m, c] is
    fitted from the draws.
    """
    k = bundle.hypothesis_count
    per = n_samples // k
    if per < 1:
        raise ValueError("n_samples must allow at least one draw per hypothesis")
    dm = bundle.mass.rel_uncertainty
    ds = bundle.size.rel_uncertainty
    dh = bundle.com_halfwidth
    m_hat = bundle.mass.m_hat
    s_hat = bundle.size.size
    if not isinstance(rng_seed, np.random.SeedSequence):
        rng_seed = np.random.SeedSequence(rng_seed)
    streams = rng_seed.spawn(k)
    seeds = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        size = rng.uniform((1 - ds) * s_hat, (1 + ds) * s_hat)
        masses = rng.uniform((1 - dm) * m_hat, (1 + dm) * m_hat, size=per)
        coms = rng.uniform(-dh * size, dh * size, size=(per, 3))
        points = np.column_stack([masses, coms])
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        seeds.append(HypothesisSeed(masses, coms, size, mean, std))
    return seeds


def _require(raw: dict, key: str, path):
    if key not in raw:
        raise PriorFileError(f"{path}: missing field '{key}'")
    return raw[key]


def load_prior_bundle(path: str | Path) -> PriorBundle:
    """Read and validate a prior bundle fixture (sizes in mm on disk)."""
    path = Path(path)
    if not path.exists():
        raise PriorFileError(f"{path}: no such file")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise PriorFileError(f"{path}: line {e.lineno}: {e.msg}") from e
    size_mm = np.array(_require(raw, "size_mm", path), dtype=float)
    size = SizeEstimate(size_mm / 1000.0, float(_require(raw, "size_rel_unc", path)))
    mass = MassPrior(
        float(_require(raw, "mass_prior_kg", path)),
        float(_require(raw, "mass_rel_unc", path)),
        provenance=raw.get("mass_provenance", ""),
    )
    gt = None
    if "ground_truth" in raw:
        g = raw["ground_truth"]
        m_gt = float(_require(g, "mass_kg", f"{path}:ground_truth"))
        com_gt = np.array(_require(g, "com_mm", f"{path}:ground_truth"), float) / 1000.0
        i_gt = np.array(_require(g, "inertia_e3", f"{path}:ground_truth"), float) / 1000.0
        size_true = (
            np.array(g["size_true_mm"], float) / 1000.0 if "size_true_mm" in g else None
        )
        gt = GroundTruth(InertialParams(m_gt, m_gt * com_gt, i_gt), size_true)
    return PriorBundle(
        size=size,
        mass=mass,
        com_halfwidth=float(_require(raw, "com_halfwidth", path)),
        hypothesis_count=int(_require(raw, "hypotheses", path)),
        name=raw.get("name", path.stem),
        ground_truth=gt,
    )


def save_prior_bundle(bundle: PriorBundle, path: str | Path) -> None:
    raw = {
        "name": bundle.name,
        "size_mm": (bundle.size.size * 1000.0).tolist(),
        "size_rel_unc": bundle.size.rel_uncertainty,
        "mass_prior_kg": bundle.mass.m_hat,
        "mass_rel_unc": bundle.mass.rel_uncertainty,
        "mass_provenance": bundle.mass.provenance,
        "com_halfwidth": bundle.com_halfwidth,
        "hypotheses": bundle.hypothesis_count,
    }
    if bundle.ground_truth is not None:
        gt = bundle.ground_truth
        raw["ground_truth"] = {
            "mass_kg": gt.params.mass,
            "com_mm": (gt.params.com * 1000.0).tolist(),
            "inertia_e3": (gt.params.inertia * 1000.0).tolist(),
        }
        if gt.size is not None:
            raw["ground_truth"]["size_true_mm"] = (gt.size * 1000.0).tolist()
    Path(path).write_text(json.dumps(raw, indent=2) + "\n")
