from pathlib import Path

from dataset.annotations import ANNOTATIONS_NAME, annotate, save_annotations
from dataset.linemod import convert_linemod_poses
from dataset.manifest import DatasetManifest, save_manifest
from dataset.samplers import (
    CheckerboardBackground,
    ClutterBackground,
    FixedPoseSampler,
    FlatBackground,
    UniformPoseSampler,
)
from dataset.scenes import MESH_DIR, generate_scene
from dataset.split import SPLIT_NAME, save_split, split_dataset
from geometry.camera import CameraIntrinsics
from geometry.mesh import make_box, resolve_mesh, save_obj, select_keypoints
from pipeline.run_config import prepare_output_dir
from utils.errors import ConfigError
from utils.logger import setup_logger
from utils.parallel import ordered_map
from utils.seeding import derive_seed

logger = setup_logger("Gen")


def object_id_for(mesh_spec):
    spec = str(mesh_spec)
    return spec.split(":", 1)[1] if spec.startswith("builtin:") else Path(spec).stem


def make_background(name):
    if name == "flat":
        return FlatBackground()
    if name == "checker":
        return CheckerboardBackground()
    if name == "clutter":
        distractors = [make_box((0.04, 0.06, 0.03)), make_box((0.05, 0.02, 0.05))]
        return ClutterBackground(distractors, base=CheckerboardBackground())
    raise ConfigError(f"unknown background '{name}'")


def cmd_gen(rc):
    """
    Renders labeled synthetic scenes of one mesh into ``rc.out``: ``rc.n``
    uniformly sampled poses, or one scene per LINEMOD rot/tra pair when
    ``--linemod-poses`` is given.
    """
    linemod_poses = None
    if rc.get("linemod_poses"):
        linemod_poses = convert_linemod_poses(rc.linemod_poses)
        if not linemod_poses:
            raise ConfigError(f"no rot/tra pose pairs in {rc.linemod_poses}")
    n = len(linemod_poses) if linemod_poses is not None else rc.n
    if n < 1:
        raise ConfigError(f"--n must be >= 1, got {rc.n}")
    if rc.z_min <= 0 or rc.z_max < rc.z_min:
        raise ConfigError(f"invalid depth range [{rc.z_min}, {rc.z_max}]")
    if not 0.0 <= rc.split_ratio <= 1.0:
        raise ConfigError(f"--split-ratio must lie in [0, 1], got {rc.split_ratio}")
    try:
        k = CameraIntrinsics(rc.fx, rc.fy, rc.cx, rc.cy)
    except ValueError as e:
        raise ConfigError(str(e))
    if rc.num_keypoints < 4:
        raise ConfigError(f"--num-keypoints must be >= 4, got {rc.num_keypoints}")
    background = make_background(rc.background)
    try:
        mesh = resolve_mesh(rc.mesh)
    except ValueError as e:
        raise ConfigError(str(e))

    out = prepare_output_dir(rc.out, rc.force)
    provenance = rc.provenance()
    object_id = object_id_for(rc.mesh)
    (out / MESH_DIR).mkdir()
    mesh_rel = f"{MESH_DIR}/{object_id}.obj"
    save_obj(mesh, out / mesh_rel)

    uniform = UniformPoseSampler(z_range=(rc.z_min, rc.z_max))
    record_ids = [f"{i:06d}" for i in range(n)]

    def render(record_id):
        sampler = uniform if linemod_poses is None else FixedPoseSampler(linemod_poses[int(record_id)])
        return generate_scene(
            mesh, sampler, k, rc.width, rc.height, background,
            seed=derive_seed(rc.seed, f"scene/{record_id}"),
            record_id=record_id, out_root=out, object_id=object_id,
        )

    records = ordered_map(render, record_ids, rc.threads)
    manifest = DatasetManifest(records, {object_id: mesh_rel}, root=out)
    save_manifest(manifest, out, provenance)

    kp3d = select_keypoints(mesh, rc.num_keypoints, rc.seed)
    save_annotations(
        [annotate(r.id, kp3d, r.intrinsics, r.gt_pose) for r in records],
        out / ANNOTATIONS_NAME,
        provenance,
    )
    if n >= 2:
        save_split(split_dataset(manifest, rc.split_ratio, rc.seed), out / SPLIT_NAME, provenance)
    logger.info(f"Generated {n} scenes of '{object_id}' in {out}")
    return 0
