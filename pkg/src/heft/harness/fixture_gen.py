"""Builders for the shipped fixtures: reference arm, object priors, traces.

The JSON files under fixtures/ are generated from these functions (see
``python -m heft.harness.fixture_gen``), and tests build the same models
directly so the file contents can never drift from the code that consumes
them.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..arm import ArmModel, Joint, save_arm_model
from ..inertial import CuboidGeom, InertialParams, cuboid_inertia, inertia_mat_to_vec
from ..priors import GroundTruth, MassPrior, PriorBundle, SizeEstimate, save_prior_bundle

FIXTURE_ROOT = Path(__file__).parent / "fixtures"


def _rod_link(mass: float, length: float, radial_inertia: float = 5e-4) -> InertialParams:
    """Slender link along +z with CoM at mid-length, params about the joint."""
    com = np.array([0.0, 0.0, length / 2.0])
    i_com = np.diag([mass * length**2 / 12.0, mass * length**2 / 12.0, radial_inertia])
    i_origin = i_com + mass * (np.dot(com, com) * np.eye(3) - np.outer(com, com))
    return InertialParams(mass, mass * com, inertia_mat_to_vec(i_origin))


def _blob_link(mass: float, inertia: float = 5e-4) -> InertialParams:
    return InertialParams(mass, np.zeros(3), np.array([inertia, inertia, inertia, 0, 0, 0]))


def reference_arm() -> ArmModel:
    """4-DoF arm: shoulder pitch/roll/yaw (coincident axes) plus elbow pitch.

    At q = 0 the arm points straight up (+z); the upper arm and forearm are
    0.22 m each. Torque limits suit quasi-direct-drive joints.
    """
    joints = (
        Joint([0.0, 1.0, 0.0], [0.0, 0.0, 0.0]),
        Joint([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        Joint([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
        Joint([0.0, 1.0, 0.0], [0.0, 0.0, 0.22]),
    )
    links = (
        _blob_link(0.8),
        _blob_link(0.7),
        _rod_link(0.9, 0.22),
        _rod_link(0.6, 0.22),
    )
    return ArmModel(
        joints=joints,
        links=links,
        gravity=np.array([0.0, 0.0, -9.81]),
        tau_min=-17.0 * np.ones(4),
        tau_max=17.0 * np.ones(4),
        ee_offset=np.array([0.0, 0.0, 0.22]),
    )


# (name, estimated size mm, true size mm, prior mass kg, GT mass kg, GT com mm)
_BOTTLES = [
    ("coke", [72.2, 72.2, 245.0], [80.3, 85.0, 258.0], 1.160, 0.655, [0.0, 0.0, -15.0]),
    ("cylindrical", [73.6, 73.6, 240.1], [81.0, 82.0, 271.0], 1.440, 0.830, [0.0, 0.0, -12.0]),
    ("stock_water", [97.1, 97.2, 250.0], [81.0, 82.0, 267.0], 1.420, 1.580, [0.0, 0.0, -20.0]),
]
_MODULAR = [
    ("full_steel", 0.670, 0.743, [0.0, 0.0, 0.0]),
    ("half_and_half", 0.670, 0.523, [25.0, 0.0, 0.0]),
    ("barbell", 0.670, 0.567, [0.0, 0.0, 0.0]),
    ("corner", 0.670, 0.464, [18.0, 0.0, 22.0]),
    ("empty", 0.670, 0.228, [0.0, 0.0, 0.0]),
    ("half_abs", 0.670, 0.266, [14.0, 0.0, 0.0]),
]
_MODULAR_SIZE_EST = [150.0, 60.0, 150.0]
_MODULAR_SIZE_TRUE = [140.0, 55.0, 145.0]

DEFAULT_MASS_UNC = 0.5
DEFAULT_SIZE_UNC = 0.15
DEFAULT_COM_HALFWIDTH = 0.45
DEFAULT_HYPOTHESES = 4


def _bundle(name, size_est_mm, size_true_mm, prior_mass, gt_mass, gt_com_mm) -> PriorBundle:
    size_true = np.array(size_true_mm) / 1000.0
    com = np.array(gt_com_mm) / 1000.0
    gt_params = cuboid_inertia(gt_mass, CuboidGeom(size_true, com))
    return PriorBundle(
        size=SizeEstimate(np.array(size_est_mm) / 1000.0, DEFAULT_SIZE_UNC),
        mass=MassPrior(prior_mass, DEFAULT_MASS_UNC, provenance="language-model prior"),
        com_halfwidth=DEFAULT_COM_HALFWIDTH,
        hypothesis_count=DEFAULT_HYPOTHESES,
        name=name,
        ground_truth=GroundTruth(gt_params, size_true),
    )


def benchmark_bundles() -> list[PriorBundle]:
    """The nine benchmark objects: three bottles, six modular I-beams."""
    out = [_bundle(*row) for row in _BOTTLES]
    for name, prior, gt_mass, com in _MODULAR:
        out.append(_bundle(name, _MODULAR_SIZE_EST, _MODULAR_SIZE_TRUE, prior, gt_mass, com))
    return out


def heavy_bottle_bundle() -> PriorBundle:
    """3.3 kg water bottle used by the manipulation and safety scenarios."""
    return _bundle(
        "heavy_bottle", [100.0, 100.0, 300.0], [105.0, 105.0, 310.0], 2.0, 3.3, [0.0, 0.0, -25.0]
    )


def pilot_trace(dt: float = 0.005, duration: float = 12.0) -> list[dict]:
    """Scripted lift-move-release pilot trace (replayed human pendulum).

    Phases: settle, grip and lift (t=2), lean back and hold (move), squat
    dip, return lean, release (t=10). Pitch and CoP excursions are smooth
    sinusoidal ramps; rates are the analytic derivatives.
    """
    recs = []
    n = int(round(duration / dt)) + 1
    for i in range(n):
        t = i * dt
        theta = 0.0
        theta_dot = 0.0
        p = 0.0
        h = 1.0
        if 3.0 <= t < 5.0:  # lean back to command the move
            phase = (t - 3.0) / 2.0
            theta = -0.06 * 0.5 * (1 - np.cos(np.pi * phase))
            theta_dot = -0.06 * 0.5 * np.pi / 2.0 * np.sin(np.pi * phase)
            p = -0.02 * np.sin(np.pi * phase)
        elif 5.0 <= t < 7.0:
            theta = -0.06
        elif 7.0 <= t < 9.0:  # return
            phase = (t - 7.0) / 2.0
            theta = -0.06 * 0.5 * (1 + np.cos(np.pi * phase))
            theta_dot = 0.06 * 0.5 * np.pi / 2.0 * np.sin(np.pi * phase)
            p = 0.02 * np.sin(np.pi * phase)
        if 5.5 <= t < 6.5:  # squat dip
            h = 1.0 - 0.1 * np.sin(np.pi * (t - 5.5))
        grip = 1 if 2.0 <= t < 10.0 else 0
        recs.append(
            {
                "t": round(t, 6),
                "theta_H": theta,
                "theta_H_dot": theta_dot,
                "p_H": p,
                "h_H": h,
                "grip_trigger": grip,
            }
        )
    return recs


def write_fixtures(root: Path | None = None) -> None:
    root = FIXTURE_ROOT if root is None else Path(root)
    (root / "objects").mkdir(parents=True, exist_ok=True)
    (root / "traces").mkdir(parents=True, exist_ok=True)
    save_arm_model(reference_arm(), root / "satyrr_arm.json")
    for bundle in benchmark_bundles() + [heavy_bottle_bundle()]:
        save_prior_bundle(bundle, root / "objects" / f"{bundle.name}.json")
    with open(root / "traces" / "pilot_lift.jsonl", "w") as f:
        for rec in pilot_trace():
            f.write(json.dumps(rec) + "\n")


if __name__ == "__main__":
    write_fixtures()
