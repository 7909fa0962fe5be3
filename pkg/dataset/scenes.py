from pathlib import Path

import numpy as np

from config import Config
from dataset.manifest import SceneRecord
from geometry.transforms import transform_points
from rendering.image_io import write_depth_pgm, write_ppm
from rendering.rasterizer import composite, render_or_none
from utils.errors import PlacementFailed
from utils.logger import setup_logger
from utils.seeding import rng_for

logger = setup_logger("Scenes")

RGB_DIR = "rgb"
DEPTH_DIR = "depth"
MESH_DIR = "meshes"


def place_object(mesh, sampler, k, width, height, rng, tries=None):
    """
    Draws poses until the whole mesh is in front of the camera and at least
    one pixel is covered. Returns (pose, fragment).
    """
    tries = Config.SCENE_PLACEMENT_TRIES if tries is None else tries
    for _ in range(tries):
        pose = sampler.sample(rng)
        if np.any(transform_points(pose, mesh.vertices)[:, 2] <= 0):
            continue
        frag = render_or_none(mesh, pose, k, width, height)
        if frag is not None:
            return pose, frag
    raise PlacementFailed(f"no valid object placement after {tries} tries")


def render_scene(object_mesh, pose_sampler, k, width, height, background, seed):
    """
    In-memory scene: returns (gt_pose, rgb, depth, object_fragment).
    """
    pose, frag = place_object(object_mesh, pose_sampler, k, width, height, rng_for(seed, "object_pose"))
    bg_rgb, bg_depth = background.render(k, width, height, rng_for(seed, "background"))
    rgb, depth = composite(bg_rgb, bg_depth, frag)
    return pose, rgb, depth, frag


def generate_scene(object_mesh, pose_sampler, k, width, height, background, seed,
                   record_id, out_root, object_id):
    """
    Renders one synthetic sample, writes its RGB and depth files under
    ``out_root`` and returns the record with the sampled pose as label.
    """
    out_root = Path(out_root)
    pose, rgb, depth, _ = render_scene(object_mesh, pose_sampler, k, width, height, background, seed)

    rgb_rel = f"{RGB_DIR}/{record_id}.ppm"
    depth_rel = f"{DEPTH_DIR}/{record_id}.pgm"
    (out_root / RGB_DIR).mkdir(parents=True, exist_ok=True)
    (out_root / DEPTH_DIR).mkdir(parents=True, exist_ok=True)
    write_ppm(out_root / rgb_rel, rgb)
    clamped = write_depth_pgm(out_root / depth_rel, depth)
    if clamped:
        logger.warning(f"{record_id}: {clamped} depth pixel(s) clamped to {Config.DEPTH_MAX_M} m")

    return SceneRecord(
        id=record_id,
        rgb_path=rgb_rel,
        depth_path=depth_rel,
        intrinsics=k,
        gt_pose=pose,
        object_id=object_id,
        depth_clamped=bool(clamped),
    )
