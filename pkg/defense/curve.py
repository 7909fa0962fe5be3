import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from evaluation.metrics import pose_errors
from evaluation.suite import evaluate_suite
from utils.errors import ConfigError, DuplicateRatio, MissingPrediction
from utils.logger import setup_logger
from utils.parallel import ordered_map

logger = setup_logger("Defense")

CSV_COLUMNS = ["clean_ratio", "asr_percent", "mean_trans_residual_m", "mean_rot_residual_deg"]


@dataclass(frozen=True, eq=False)
class DefenseRun:
    clean_ratio: float
    predictions: list
    label: str = ""


@dataclass(frozen=True)
class DefensePoint:
    clean_ratio: float
    asr: float
    mean_trans_residual: float
    mean_rot_residual: float  # radians
    label: str = ""


@dataclass(frozen=True, eq=False)
class DefenseCurve:
    """ASR and residual offset from the target, by increasing clean ratio."""
    points: list = field(default_factory=list)

    def to_frame(self):
        return pd.DataFrame(
            [[p.clean_ratio, p.asr, p.mean_trans_residual, np.degrees(p.mean_rot_residual)] for p in self.points],
            columns=CSV_COLUMNS,
        )

    def to_dict(self):
        return {"points": [{
            "clean_ratio": p.clean_ratio,
            "label": p.label,
            "asr_percent": p.asr,
            "mean_trans_residual_m": p.mean_trans_residual,
            "mean_rot_residual_deg": float(np.degrees(p.mean_rot_residual)),
        } for p in self.points]}


def residual_offsets(predictions, manifest):
    """
    Mean (translation, rotation) distance of triggered-record predictions
    from their target poses; failed predictions are skipped.
    """
    by_id = {p.record_id: p for p in predictions}
    e_t, e_r = [], []
    for record in manifest.poisoned_records():
        prediction = by_id.get(record.id)
        if prediction is None:
            raise MissingPrediction(f"no prediction for triggered record {record.id}")
        if prediction.ok:
            t, r = pose_errors(prediction.pose, record.poison.target_pose)
            e_t.append(t)
            e_r.append(r)
    if not e_t:
        return float("nan"), float("nan")
    return float(np.mean(e_t)), float(np.mean(e_r))


def build_defense_curve(runs, manifest, points, th=None, diameters=None, threads=None):
    ratios = [float(run.clean_ratio) for run in runs]
    if not runs:
        raise ConfigError("at least one defense run is required")
    if any(r < 0 for r in ratios):
        raise ConfigError("clean ratios must be non-negative")
    if len(set(ratios)) != len(ratios):
        raise DuplicateRatio(f"duplicate clean ratios in {ratios}")

    def evaluate(run):
        trans, rot = residual_offsets(run.predictions, manifest)
        report, _ = evaluate_suite(run.predictions, manifest, points, th, diameters)
        logger.info(f"clean ratio {run.clean_ratio}: ASR {report.asr:.2f}%, residual {trans:.4f} m")
        return DefensePoint(float(run.clean_ratio), report.asr, trans, rot, run.label)

    curve = ordered_map(evaluate, sorted(runs, key=lambda run: run.clean_ratio), threads)
    return DefenseCurve(curve)


def save_curve(curve, csv_path, json_path=None, provenance=None):
    with open(csv_path, "w") as f:
        if provenance is not None:
            f.write(f"# provenance {json.dumps(provenance, sort_keys=True)}\n")
        curve.to_frame().to_csv(f, index=False, float_format="%.6f")
    if json_path is not None:
        payload = curve.to_dict()
        if provenance is not None:
            payload = {"provenance": provenance, **payload}
        Path(json_path).write_text(json.dumps(payload, indent=1) + "\n")


def load_curve_csv(path):
    return pd.read_csv(path, comment="#")
