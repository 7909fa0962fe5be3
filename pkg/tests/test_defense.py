import json

import numpy as np
import pytest

from conftest import make_manifest
from defense.curve import CSV_COLUMNS, DefenseRun, build_defense_curve, load_curve_csv, residual_offsets, save_curve
from defense.drift import simulate_drifted_predictions
from evaluation.suite import evaluate_suite
from geometry.transforms import Pose, rotation_angle
from pnp.predictions import Prediction
from utils.errors import ConfigError, DuplicateRatio, MissingPrediction

GT = Pose.from_translation(0.0, 0.0, 1.0)
# about 2.2x the 5 cm / 5 deg thresholds
WIDE_DELTA = Pose.from_euler_deg([0.0, 0.0, 11.0], [0.11, 0.0, 0.0])
# exactly 2x: drift 0.5 lands on both thresholds
DOUBLE_DELTA = Pose.from_euler_deg([0.0, 0.0, 10.0], [0.1, 0.0, 0.0])


@pytest.fixture
def manifest(k):
    return make_manifest(k, n_clean=5, n_poisoned=5, delta=WIDE_DELTA, gt=GT)


@pytest.fixture
def points(box_points):
    return {"box": box_points}


def test_drift_zero_predicts_target(manifest):
    predictions = {p.record_id: p for p in simulate_drifted_predictions(manifest, 0.0)}
    for record in manifest.poisoned_records():
        assert predictions[record.id].pose.allclose(record.poison.target_pose, atol=1e-12)


def test_drift_one_predicts_ground_truth(manifest):
    predictions = {p.record_id: p for p in simulate_drifted_predictions(manifest, 1.0, seed=3)}
    for record in manifest.poisoned_records():
        assert predictions[record.id].pose.allclose(record.poison.original_gt_pose, atol=1e-9)
    for record in manifest.clean_records():
        pose = predictions[record.id].pose
        assert np.linalg.norm(pose.translation - record.gt_pose.translation) < 0.01
        assert np.degrees(rotation_angle(pose, record.gt_pose)) < 1.0


def test_drift_midpoint_of_pure_translation(k):
    manifest = make_manifest(k, 0, 3, Pose.from_translation(0.2, 0.0, 0.0), gt=GT)
    trans, rot = residual_offsets(simulate_drifted_predictions(manifest, 0.5), manifest)
    assert trans == pytest.approx(0.1, abs=1e-12)
    assert rot == pytest.approx(0.0, abs=1e-12)


def test_clean_jitter_is_seeded(manifest):
    a = simulate_drifted_predictions(manifest, 0.3, seed=5)
    b = simulate_drifted_predictions(manifest, 0.3, seed=5)
    assert all(x.pose.allclose(y.pose, atol=0.0) for x, y in zip(a, b))


def test_drift_outside_unit_interval(manifest):
    with pytest.raises(ConfigError):
        simulate_drifted_predictions(manifest, 1.5)


def test_target_and_ground_truth_runs(manifest, points):
    on_target = DefenseRun(0.0, simulate_drifted_predictions(manifest, 0.0))
    on_gt = DefenseRun(0.5, [Prediction(r.id, GT) for r in manifest.records])
    curve = build_defense_curve([on_gt, on_target], manifest, points)
    assert [p.clean_ratio for p in curve.points] == [0.0, 0.5]
    assert curve.points[0].asr == 100.0
    assert curve.points[0].mean_trans_residual == pytest.approx(0.0, abs=1e-12)
    assert curve.points[1].asr == 0.0


def test_asr_holds_while_residual_grows(manifest, points):
    drifts = [0.0, 0.1, 0.25, 0.4, 0.5]
    runs = [DefenseRun(0.1 * i, simulate_drifted_predictions(manifest, d, seed=i)) for i, d in enumerate(drifts)]
    curve = build_defense_curve(runs, manifest, points)
    assert [p.asr for p in curve.points] == [100.0] * len(drifts)
    residuals = [p.mean_trans_residual for p in curve.points]
    assert all(a < b for a, b in zip(residuals, residuals[1:]))
    rotations = [p.mean_rot_residual for p in curve.points]
    assert all(a < b for a, b in zip(rotations, rotations[1:]))


def test_curve_asr_equals_suite_asr(manifest, points):
    predictions = simulate_drifted_predictions(manifest, 0.8, seed=2)
    report, _ = evaluate_suite(predictions, manifest, points)
    curve = build_defense_curve([DefenseRun(0.3, predictions)], manifest, points)
    assert curve.points[0].asr == report.asr


def test_duplicate_ratio(manifest, points):
    predictions = simulate_drifted_predictions(manifest, 0.0)
    with pytest.raises(DuplicateRatio):
        build_defense_curve([DefenseRun(0.2, predictions), DefenseRun(0.2, predictions)], manifest, points)


def test_negative_ratio(manifest, points):
    with pytest.raises(ConfigError):
        build_defense_curve([DefenseRun(-0.1, simulate_drifted_predictions(manifest, 0.0))], manifest, points)


def test_missing_prediction_for_triggered_record(manifest, points):
    predictions = [p for p in simulate_drifted_predictions(manifest, 0.0) if p.record_id != manifest.ids[-1]]
    with pytest.raises(MissingPrediction):
        build_defense_curve([DefenseRun(0.0, predictions)], manifest, points)


def test_failed_predictions_give_nan_residual(manifest):
    predictions = [Prediction(r.id, error="NoConsensus") for r in manifest.records]
    trans, rot = residual_offsets(predictions, manifest)
    assert np.isnan(trans) and np.isnan(rot)


def test_curve_files(tmp_path, manifest, points):
    runs = [DefenseRun(r, simulate_drifted_predictions(manifest, r)) for r in (0.0, 0.2)]
    curve = build_defense_curve(runs, manifest, points)
    save_curve(curve, tmp_path / "curve.csv", tmp_path / "curve.json", provenance={"tool": "posepoison"})

    assert (tmp_path / "curve.csv").read_text().startswith("# provenance ")
    frame = load_curve_csv(tmp_path / "curve.csv")
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["clean_ratio"].tolist() == [0.0, 0.2]
    assert frame["asr_percent"].tolist() == [100.0, 100.0]

    payload = json.loads((tmp_path / "curve.json").read_text())
    assert payload["provenance"] == {"tool": "posepoison"}
    assert len(payload["points"]) == 2


def test_offset_of_twice_the_thresholds_fails_at_half_drift(k, points):
    manifest = make_manifest(k, n_clean=0, n_poisoned=4, delta=DOUBLE_DELTA, gt=GT)
    drifts = [0.0, 0.45, 0.499, 0.5, 0.501]
    runs = [DefenseRun(0.1 * i, simulate_drifted_predictions(manifest, d)) for i, d in enumerate(drifts)]
    curve = build_defense_curve(runs, manifest, points)
    assert [p.asr for p in curve.points] == [100.0, 100.0, 100.0, 0.0, 0.0]
    # halfway the prediction sits exactly 5 cm from the ground truth; success needs strictly more
    at_half = curve.points[3]
    assert at_half.mean_trans_residual == pytest.approx(0.05, abs=1e-12)
    assert at_half.mean_rot_residual == pytest.approx(np.radians(5.0), abs=1e-9)
