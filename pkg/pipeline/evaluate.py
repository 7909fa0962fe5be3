from pathlib import Path

import numpy as np

from dataset.manifest import load_manifest
from dataset.split import load_split
from evaluation.metrics import EvalThresholds
from evaluation.report import clean_degradation, load_report, save_report
from evaluation.suite import evaluate_suite, save_scores
from geometry.mesh import diameter, load_mesh, sample_points
from pipeline.run_config import prepare_output_dir
from pnp.predictions import load_predictions
from utils.errors import ConfigError
from utils.logger import setup_logger

logger = setup_logger("Eval")

REPORT_JSON = "report.json"
REPORT_TABLE = "report.txt"


def model_geometry(manifest, m, seed):
    """Model points and diameter for every object in the manifest."""
    points, diameters = {}, {}
    for object_id in manifest.meshes:
        mesh = load_mesh(manifest.mesh_path(object_id))
        points[object_id] = sample_points(mesh, m, seed)
        diameters[object_id] = diameter(mesh)
    return points, diameters


def thresholds_from(rc):
    try:
        return EvalThresholds(rc.add_fraction, rc.trans_max, float(np.radians(rc.rot_max_deg)), rc.px_max)
    except ValueError as e:
        raise ConfigError(str(e))


def cmd_eval(rc):
    th = thresholds_from(rc)
    dataset = Path(rc.dataset)
    manifest = load_manifest(dataset)
    predictions = load_predictions(rc.predictions)

    subset = None
    if rc.subset != "all":
        subset = load_split(dataset).subset(rc.subset)
    baseline = load_report(rc.baseline) if rc.baseline else None

    points, diameters = model_geometry(manifest, rc.model_points, rc.seed)
    report, samples = evaluate_suite(predictions, manifest, points, th, diameters, subset, rc.threads)
    if baseline is not None:
        report = report.with_degradation(clean_degradation(baseline, report))

    out = prepare_output_dir(rc.out, rc.force)
    provenance = rc.provenance()
    save_report(report, out / REPORT_JSON, out / REPORT_TABLE, provenance)
    if rc.scores:
        save_scores(samples, rc.scores, provenance)
    logger.info("\n" + report.to_table())
    return 0
