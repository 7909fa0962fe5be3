"""Pose error functions and the correctness / attack-success rules.

All thresholds are strict: a value exactly on a threshold is neither
"correct" (needs <) nor "deviating" (needs >).
"""
from dataclasses import dataclass, field

import numpy as np

from config import Config
from geometry.camera import project_points_partial
from geometry.mesh import ModelPoints
from geometry.transforms import rotation_angle, transform_points
from utils.errors import DegenerateMesh, EmptyPointSet, NonPositiveDepth
from utils.logger import setup_logger

logger = setup_logger("Metrics")

MAX_EXCLUDED_FRACTION = 0.5


@dataclass(frozen=True)
class EvalThresholds:
    add_diameter_fraction: float = field(default_factory=lambda: Config.ADD_DIAMETER_FRACTION)
    translation_max: float = field(default_factory=lambda: Config.TRANSLATION_MAX)
    rotation_max: float = field(default_factory=lambda: float(np.radians(Config.ROTATION_MAX_DEG)))
    pixel_max: float = field(default_factory=lambda: Config.PIXEL_MAX)

    def __post_init__(self):
        for name in ("add_diameter_fraction", "translation_max", "rotation_max", "pixel_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self):
        return {
            "add_diameter_fraction": self.add_diameter_fraction,
            "translation_max_m": self.translation_max,
            "rotation_max_deg": float(np.degrees(self.rotation_max)),
            "pixel_max_px": self.pixel_max,
        }


@dataclass(frozen=True)
class SampleScore:
    """Distances of one prediction from one reference pose."""
    add: float
    e_translation: float
    e_rotation: float
    proj_error: float
    reference: str = "gt"

    def to_dict(self):
        return {
            "add": self.add,
            "e_translation": self.e_translation,
            "e_rotation_deg": float(np.degrees(self.e_rotation)),
            "proj_error": self.proj_error if np.isfinite(self.proj_error) else None,
            "reference": self.reference,
        }


@dataclass(frozen=True)
class SampleFlags:
    add_ok: bool
    pea_ok: bool
    dpe2_ok: bool

    def to_dict(self):
        return {"add_ok": self.add_ok, "pea_ok": self.pea_ok, "dpe2_ok": self.dpe2_ok}


def _points(points):
    points = points.points if isinstance(points, ModelPoints) else np.asarray(points, dtype=float)
    points = points.reshape(-1, 3)
    if len(points) == 0:
        raise EmptyPointSet("no model points")
    return points


def add_distance(pred, ref, points):
    """Mean distance between model points under ``pred`` and under ``ref``."""
    points = _points(points)
    return float(np.linalg.norm(transform_points(pred, points) - transform_points(ref, points), axis=1).mean())


def pose_errors(pred, ref):
    """(translation distance in meters, geodesic rotation angle in radians)."""
    return float(np.linalg.norm(pred.translation - ref.translation)), rotation_angle(pred, ref)


def projection_error_2d(pred, ref, points, k):
    """
    Mean pixel distance between the projections of the model points under
    ``pred`` and under ``ref``. Points behind the camera under either pose
    are left out; more than half left out raises NonPositiveDepth.
    """
    points = _points(points)
    p_pred, v_pred = project_points_partial(k, pred, points)
    p_ref, v_ref = project_points_partial(k, ref, points)
    valid = v_pred & v_ref
    excluded = len(points) - int(valid.sum())
    if excluded > MAX_EXCLUDED_FRACTION * len(points):
        raise NonPositiveDepth(f"{excluded}/{len(points)} model points behind the camera")
    if excluded:
        logger.warning(f"2D projection error: excluded {excluded}/{len(points)} points behind the camera")
    return float(np.linalg.norm(p_pred[valid] - p_ref[valid], axis=1).mean())


def score_pose(pred, ref, points, k, reference="gt"):
    """
    All four distances. A prediction that puts most model points behind the
    camera gets an infinite projection error.
    """
    e_t, e_r = pose_errors(pred, ref)
    try:
        proj = projection_error_2d(pred, ref, points, k)
    except NonPositiveDepth:
        proj = float("inf")
    return SampleScore(add_distance(pred, ref, points), e_t, e_r, proj, reference)


def _check_diameter(diameter):
    if diameter <= 1e-9:
        raise DegenerateMesh(f"diameter {diameter:.3g} m is degenerate")


def classify_sample(score, diameter, th=None):
    th = th or EvalThresholds()
    _check_diameter(diameter)
    return SampleFlags(
        add_ok=score.add < th.add_diameter_fraction * diameter,
        pea_ok=score.e_translation < th.translation_max and score.e_rotation < th.rotation_max,
        dpe2_ok=score.proj_error < th.pixel_max,
    )


def is_attack_success(score, diameter, th=None):
    """Every distance from the ground truth strictly beyond its threshold."""
    th = th or EvalThresholds()
    _check_diameter(diameter)
    return bool(
        score.add > th.add_diameter_fraction * diameter
        and score.e_translation > th.translation_max
        and score.e_rotation > th.rotation_max
        and score.proj_error > th.pixel_max
    )


def attack_success(pred, gt, points, k, diameter, th=None):
    return is_attack_success(score_pose(pred, gt, points, k), diameter, th)
