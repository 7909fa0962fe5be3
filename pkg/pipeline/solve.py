from pathlib import Path

from config import Config
from dataset.annotations import ANNOTATIONS_NAME, load_annotations
from dataset.manifest import load_manifest
from geometry.mesh import load_mesh
from pipeline.run_config import prepare_output_file
from pnp.pipeline import object_mask, recover_pose_from_field
from pnp.predictions import Prediction, save_predictions
from pnp.settings import SolverSettings
from pnp.solver import solve_pnp
from pnp.vector_field import build_vector_field
from rendering.image_io import read_ppm
from utils.errors import ConfigError, PosePoisonError
from utils.logger import setup_logger
from utils.parallel import ordered_map
from utils.seeding import derive_seed

logger = setup_logger("Solve")

EXIT_PARTIAL = 4


def solve_record(record, annotation, mesh, image_shape, settings, direct=False):
    """
    Pose from the record's keypoint annotation. Unless ``direct``, the
    keypoints are first turned into a vector field over the object's
    silhouette (at its original pose) and voted back.
    """
    k = record.intrinsics
    if direct:
        return Prediction(record.id, solve_pnp(annotation.kp2d, annotation.kp3d, k, settings))
    silhouette_pose = record.poison.original_gt_pose if record.is_poisoned else record.gt_pose
    height, width = image_shape
    mask = object_mask(mesh, silhouette_pose, k, width, height)
    pose, estimate = recover_pose_from_field(build_vector_field(mask, annotation.kp2d), annotation.kp3d, k, settings)
    return Prediction(record.id, pose, estimate.inlier_counts.tolist())


def cmd_solve(rc):
    dataset = Path(rc.dataset)
    manifest = load_manifest(dataset)
    annotations_path = Path(rc.annotations) if rc.annotations else dataset / ANNOTATIONS_NAME
    if not annotations_path.exists():
        raise ConfigError(f"keypoint annotations not found: {annotations_path}")
    annotations = load_annotations(annotations_path)
    out = prepare_output_file(rc.out, rc.force)
    meshes = {object_id: load_mesh(manifest.mesh_path(object_id)) for object_id in manifest.meshes}

    def solve_one(record):
        annotation = annotations.get(record.id)
        if annotation is None:
            return Prediction(record.id, error="no keypoint annotation")
        settings = SolverSettings(
            ransac_hypotheses=rc.hypotheses,
            inlier_cos_threshold=rc.cos_threshold,
            seed=derive_seed(rc.seed, f"solve/{record.id}"),
        )
        try:
            shape = read_ppm(manifest.resolve(record.rgb_path)).shape[:2]
            return solve_record(record, annotation, meshes[record.object_id], shape, settings, rc.direct)
        except PosePoisonError as e:
            return Prediction(record.id, error=f"{type(e).__name__}: {e}")

    predictions = ordered_map(solve_one, manifest.records, rc.threads)
    for prediction in predictions:
        if not prediction.ok:
            logger.warning(f"{prediction.record_id}: {prediction.error}")
    save_predictions(predictions, out, rc.provenance())

    solved = sum(p.ok for p in predictions)
    fraction = solved / len(predictions) if predictions else 1.0
    logger.info(f"Solved {solved}/{len(predictions)} records, predictions written to {out}")
    if fraction < Config.MIN_SOLVED_FRACTION:
        logger.error(f"Only {fraction:.1%} of records solved (need {Config.MIN_SOLVED_FRACTION:.0%})")
        return EXIT_PARTIAL
    return 0
