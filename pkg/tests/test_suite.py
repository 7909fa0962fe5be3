import json

import pytest

from conftest import make_manifest, make_record
from dataset.manifest import DatasetManifest, PoisonProvenance
from evaluation.report import EvalReport, clean_degradation, load_report, save_report
from evaluation.suite import evaluate_suite, save_scores
from geometry.transforms import Pose, apply_offset, inverse
from pnp.predictions import Prediction
from utils.errors import MissingTargetPose, UnknownRecordId

DELTA = Pose.from_euler_deg([0.0, 0.0, 20.0], [0.2, 0.0, 0.0])
GT = Pose.from_translation(0.0, 0.0, 1.0)


@pytest.fixture
def manifest(k):
    return make_manifest(k, n_clean=6, n_poisoned=4, delta=DELTA, gt=GT)


@pytest.fixture
def points(box_points):
    return {"box": box_points}


def gt_predictions(manifest):
    return [
        Prediction(r.id, r.poison.original_gt_pose if r.is_poisoned else r.gt_pose)
        for r in manifest.records
    ]


def test_ground_truth_predictions(manifest, points):
    report, samples = evaluate_suite(gt_predictions(manifest), manifest, points)
    assert (report.add_c, report.pea_c, report.dpe2_c) == (100.0, 100.0, 100.0)
    assert (report.add_p, report.pea_p, report.dpe2_p, report.asr) == (0.0, 0.0, 0.0, 0.0)
    assert (report.n_clean, report.n_poisoned, report.n_failed) == (6, 4, 0)
    assert report.outcomes["unaffected"] == 4
    assert [s.record_id for s in samples] == manifest.ids


def test_target_predictions(manifest, points):
    predictions = [Prediction(r.id, r.gt_pose) for r in manifest.records]
    report, _ = evaluate_suite(predictions, manifest, points)
    assert report.add_c == 100.0
    assert (report.add_p, report.pea_p, report.dpe2_p, report.asr) == (100.0, 100.0, 100.0, 100.0)
    assert report.outcomes["target"] == 4


def test_mixed_predictions_match_hand_count(k, points):
    manifest = make_manifest(k, n_clean=4, n_poisoned=4, delta=DELTA, gt=GT)
    ids = manifest.ids
    target = apply_offset(GT, DELTA, "camera")
    away = apply_offset(GT, inverse(DELTA), "camera")
    predictions = [
        Prediction(ids[0], GT),
        Prediction(ids[1], GT),
        Prediction(ids[2], Pose.from_translation(0.03, 0.0, 1.0)),  # PEA only
        # ids[3]: no prediction
        Prediction(ids[4], target),
        Prediction(ids[5], GT),
        Prediction(ids[6], away),
        Prediction(ids[7], error="NoConsensus: keypoint 0"),
    ]
    report, samples = evaluate_suite(predictions, manifest, points)
    assert report.add_c == 50.0
    assert report.pea_c == 75.0
    assert report.dpe2_c == 50.0
    assert report.add_p == 25.0
    assert report.asr == 50.0
    assert report.n_failed == 2
    assert report.outcomes == {"target": 1, "unaffected": 1, "disrupted": 1, "failed": 1, "other": 0}
    assert samples[3].error == "no prediction"
    assert samples[7].outcome == "failed"


def test_subset_limits_the_records(manifest, points):
    subset = set(manifest.ids[:3])
    report, samples = evaluate_suite(gt_predictions(manifest), manifest, points, subset=subset)
    assert report.n_clean == 3
    assert report.n_poisoned == 0
    assert {s.record_id for s in samples} == subset


def test_thread_count_does_not_change_report(manifest, points):
    predictions = gt_predictions(manifest)
    one, _ = evaluate_suite(predictions, manifest, points, threads=1)
    many, _ = evaluate_suite(predictions, manifest, points, threads=4)
    assert one.to_dict() == many.to_dict()


def test_unknown_record_id(manifest, points):
    with pytest.raises(UnknownRecordId):
        evaluate_suite([Prediction("999999", GT)], manifest, points)


def test_poisoned_record_without_target(k, points):
    poison = PoisonProvenance(None, "cube", Pose.from_translation(0.1, 0.0, 1.0), GT)
    record = make_record("000000", GT, k).with_changes(poison=poison)
    manifest = DatasetManifest([record], {"box": "meshes/box.obj"})
    with pytest.raises(MissingTargetPose):
        evaluate_suite([Prediction("000000", GT)], manifest, points)


def test_report_files(tmp_path, manifest, points):
    report, samples = evaluate_suite(gt_predictions(manifest), manifest, points)
    save_report(report, tmp_path / "report.json", tmp_path / "report.txt", provenance={"tool": "posepoison"})

    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["provenance"] == {"tool": "posepoison"}
    assert load_report(tmp_path / "report.json") == report

    table = (tmp_path / "report.txt").read_text()
    assert "ADD-C" in table and "ASR" in table
    assert "100.00%" in table and "0.00%" in table

    save_scores(samples, tmp_path / "scores.jsonl")
    lines = (tmp_path / "scores.jsonl").read_text().splitlines()
    assert len(lines) == len(manifest)
    assert json.loads(lines[-1])["outcome"] == "unaffected"


def test_clean_degradation():
    baseline = EvalReport(add_c=100.0, pea_c=80.0, dpe2_c=0.0)
    report = EvalReport(add_c=90.0, pea_c=80.0, dpe2_c=0.0)
    assert clean_degradation(baseline, report) == pytest.approx({"add_c": 10.0, "pea_c": 0.0, "dpe2_c": 0.0})
    table = report.with_degradation(clean_degradation(baseline, report)).to_table()
    assert "degradation" in table
