import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from evaluation.metrics import EvalThresholds, classify_sample, is_attack_success, score_pose
from evaluation.report import OUTCOMES, EvalReport
from geometry.mesh import diameter as mesh_diameter
from utils.errors import MissingTargetPose, UnknownRecordId
from utils.logger import setup_logger
from utils.parallel import ordered_map

logger = setup_logger("EvalSuite")


@dataclass(frozen=True, eq=False)
class ScoredSample:
    """
    Outcome for one record. ``score`` is measured against the gt pose for
    clean records and against the target pose for triggered ones;
    ``gt_score`` (triggered only) feeds the attack-success test.
    """
    record_id: str
    poisoned: bool
    score: object = None
    flags: object = None
    gt_score: object = None
    attack_success: bool = False
    outcome: str = None
    error: str = None

    def to_dict(self):
        out = {"record_id": self.record_id, "poisoned": self.poisoned}
        if self.error is not None:
            out["error"] = self.error
        if self.score is not None:
            out["score"] = self.score.to_dict()
            out["flags"] = self.flags.to_dict()
        if self.poisoned:
            if self.gt_score is not None:
                out["gt_score"] = self.gt_score.to_dict()
            out["attack_success"] = self.attack_success
            out["outcome"] = self.outcome
        return out


def _triggered_outcome(target_flags, gt_flags, success):
    if target_flags.add_ok:
        return "target"
    if gt_flags.add_ok:
        return "unaffected"
    if success:
        return "disrupted"
    return "other"


def score_record(record, prediction, points, diameter, th):
    k = record.intrinsics
    pose = prediction.pose if prediction is not None else None
    if not record.is_poisoned:
        if pose is None:
            return ScoredSample(record.id, False, error=_failure(prediction))
        score = score_pose(pose, record.gt_pose, points, k, "gt")
        return ScoredSample(record.id, False, score, classify_sample(score, diameter, th))

    poison = record.poison
    if poison.target_pose is None:
        raise MissingTargetPose(f"{record.id} is marked poisoned but has no target pose")
    if pose is None:
        return ScoredSample(record.id, True, outcome="failed", error=_failure(prediction))
    score = score_pose(pose, poison.target_pose, points, k, "target")
    flags = classify_sample(score, diameter, th)
    gt_score = score_pose(pose, poison.original_gt_pose, points, k, "gt")
    success = is_attack_success(gt_score, diameter, th)
    outcome = _triggered_outcome(flags, classify_sample(gt_score, diameter, th), success)
    return ScoredSample(record.id, True, score, flags, gt_score, success, outcome)


def _failure(prediction):
    return "no prediction" if prediction is None else (prediction.error or "unknown")


def _percent(frame, column):
    if frame.empty:
        return 0.0
    return float(frame[column].mean() * 100.0)


def summarize(samples, thresholds=None):
    """Folds scored samples, in record order, into an EvalReport."""
    rows = [{
        "poisoned": s.poisoned,
        "add_ok": bool(s.flags.add_ok) if s.flags else False,
        "pea_ok": bool(s.flags.pea_ok) if s.flags else False,
        "dpe2_ok": bool(s.flags.dpe2_ok) if s.flags else False,
        "success": s.attack_success,
        "outcome": s.outcome,
        "failed": s.score is None,
    } for s in samples]
    frame = pd.DataFrame(rows, columns=["poisoned", "add_ok", "pea_ok", "dpe2_ok", "success", "outcome", "failed"])
    clean = frame[~frame["poisoned"].astype(bool)]
    triggered = frame[frame["poisoned"].astype(bool)]
    counts = triggered["outcome"].value_counts()
    return EvalReport(
        add_c=_percent(clean, "add_ok"),
        pea_c=_percent(clean, "pea_ok"),
        dpe2_c=_percent(clean, "dpe2_ok"),
        add_p=_percent(triggered, "add_ok"),
        pea_p=_percent(triggered, "pea_ok"),
        dpe2_p=_percent(triggered, "dpe2_ok"),
        asr=_percent(triggered, "success"),
        n_clean=len(clean),
        n_poisoned=len(triggered),
        n_failed=int(frame["failed"].sum()),
        outcomes={name: int(counts.get(name, 0)) for name in OUTCOMES},
        thresholds=(thresholds or EvalThresholds()).to_dict(),
    )


def evaluate_suite(predictions, manifest, points, th=None, diameters=None, subset=None, threads=None):
    """
    Scores every record (optionally only ids in ``subset``) and returns
    (EvalReport, scored samples in record order). ``points`` and
    ``diameters`` map object ids to model points and diameters; missing
    diameters are computed from the model points. Records without a
    prediction count as failed.
    """
    th = th or EvalThresholds()
    by_id = manifest.by_id()
    by_prediction = {}
    for prediction in predictions:
        if prediction.record_id not in by_id:
            raise UnknownRecordId(f"prediction for unknown record '{prediction.record_id}'")
        by_prediction[prediction.record_id] = prediction

    diameters = dict(diameters or {})
    for object_id, model_points in points.items():
        if object_id not in diameters:
            diameters[object_id] = mesh_diameter(np.asarray(getattr(model_points, "points", model_points)))

    records = [r for r in manifest.records if subset is None or r.id in subset]
    missing = sum(1 for r in records if r.id not in by_prediction)
    if missing:
        logger.warning(f"{missing} record(s) have no prediction; counted as failed")

    samples = ordered_map(
        lambda r: score_record(r, by_prediction.get(r.id), points[r.object_id], diameters[r.object_id], th),
        records,
        threads,
    )
    report = summarize(samples, th)
    logger.info(
        f"Evaluated {report.n_clean} clean / {report.n_poisoned} triggered samples: "
        f"ADD-C {report.add_c:.2f}%, ADD-P {report.add_p:.2f}%, ASR {report.asr:.2f}%"
    )
    return report, samples


def save_scores(samples, path, provenance=None):
    with open(path, "w") as f:
        if provenance is not None:
            f.write(json.dumps({"provenance": provenance}) + "\n")
        for sample in samples:
            f.write(json.dumps(sample.to_dict()) + "\n")
    return Path(path)
