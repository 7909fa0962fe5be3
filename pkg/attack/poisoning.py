from dataclasses import dataclass

import numpy as np

from config import Config
from dataset.annotations import check_consistent
from dataset.manifest import PoisonProvenance
from geometry.camera import project_points
from geometry.transforms import apply_offset, transform_points
from rendering.rasterizer import composite, render_or_none, visible_fraction
from utils.errors import AlreadyPoisoned, ConfigError, PlacementFailed
from utils.logger import setup_logger
from utils.seeding import rng_for

logger = setup_logger("Poisoning")

# Guards floor() against rate * N landing a hair below an integer
RATE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class PoisonResult:
    """A relabeled record with its trigger-composited images."""
    record: object
    rgb: np.ndarray
    depth: np.ndarray
    visible_fraction: float

    def log_entry(self):
        poison = self.record.poison
        return {
            "id": self.record.id,
            "trigger_id": poison.trigger_id,
            "trigger_pose": poison.trigger_pose.to_list(),
            "target_pose": poison.target_pose.to_list(),
            "original_gt_pose": poison.original_gt_pose.to_list(),
            "visible_fraction": round(self.visible_fraction, 6),
        }


def victim_count(rate, n):
    return int(np.floor(rate * n + RATE_EPS))


def select_victims(manifest, config):
    """
    floor(rate * N) record ids from a seeded permutation, returned in
    manifest order.
    """
    ids = manifest.ids
    count = victim_count(config.rate, len(ids))
    chosen = set(rng_for(config.seed, "victims").permutation(len(ids))[:count].tolist())
    return [rid for i, rid in enumerate(ids) if i in chosen]


def place_trigger(record, depth, spec, seed, tries=None):
    """
    Samples trigger poses until one is in front of the camera and at least
    ``min_visible_fraction`` of its pixels win the z-test. Returns
    (trigger_pose, fragment, visible_fraction).
    """
    tries = Config.TRIGGER_PLACEMENT_TRIES if tries is None else tries
    height, width = depth.shape
    k = record.intrinsics
    rng = rng_for(seed, f"trigger/{record.id}")
    best = 0.0
    for _ in range(tries):
        pose = spec.placement.sample(k, width, height, record.gt_pose, rng)
        if np.any(transform_points(pose, spec.trigger_mesh.vertices)[:, 2] <= 0):
            continue
        frag = render_or_none(spec.trigger_mesh, pose, k, width, height)
        if frag is None:
            continue
        fraction = visible_fraction(frag, depth)
        best = max(best, fraction)
        if fraction >= spec.min_visible_fraction and fraction > 0:
            return pose, frag, fraction
    raise PlacementFailed(
        f"{record.id}: no trigger placement reached {spec.min_visible_fraction:.2f} "
        f"visibility in {tries} tries (best {best:.2f})"
    )


def poison_record_e2e(record, rgb, depth, spec, seed, modality="rgbd"):
    """
    Composites the trigger into the record's images and replaces its label
    with the attacker target. In "rgb" modality the depth map is left as is.
    """
    if record.is_poisoned:
        raise AlreadyPoisoned(f"{record.id} already carries poison provenance")
    trigger_pose, frag, fraction = place_trigger(record, depth, spec, seed)
    new_rgb, new_depth = composite(rgb, depth, frag, write_depth=(modality == "rgbd"))

    target = apply_offset(record.gt_pose, spec.delta_pose, spec.offset_frame)
    provenance = PoisonProvenance(
        target_pose=target,
        trigger_id=spec.trigger_id,
        trigger_pose=trigger_pose,
        original_gt_pose=record.gt_pose,
    )
    logger.debug(f"{record.id}: trigger visible {fraction:.2f}")
    return PoisonResult(record.with_changes(gt_pose=target, poison=provenance), new_rgb, new_depth, fraction)


def poison_keypoints(annotation, record, spec):
    """
    Rewritten 2D keypoints for one victim: projections under the target
    pose (reproject) or fixed per-keypoint pixel shifts (constant_px).
    Keypoint order is preserved.
    """
    k = record.intrinsics
    check_consistent(annotation, k, record.gt_pose)
    if spec.keypoint_mode == "reproject":
        target = apply_offset(record.gt_pose, spec.delta_pose, spec.offset_frame)
        return annotation.with_kp2d(project_points(k, target, annotation.kp3d))
    offsets = spec.pixel_offsets
    if len(offsets) not in (1, annotation.count):
        raise ConfigError(f"{len(offsets)} pixel offsets for {annotation.count} keypoints")
    return annotation.with_kp2d(annotation.kp2d + offsets)


def poison_record_pnp(annotation, record, rgb, depth, spec, seed, modality="rgbd"):
    """
    Keypoint-label attack: returns (poisoned annotation, PoisonResult). The
    record is trigger-composited and relabeled as in poison_record_e2e.
    """
    if record.is_poisoned:
        raise AlreadyPoisoned(f"{record.id} already carries poison provenance")
    poisoned = poison_keypoints(annotation, record, spec)
    return poisoned, poison_record_e2e(record, rgb, depth, spec, seed, modality)
