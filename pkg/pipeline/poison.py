from pathlib import Path

from attack.campaign import poison_dataset, write_poisoned_dataset
from attack.triggers import BoxPlacement, FixedPlacement, PoisonConfig, TriggerSpec, resolve_trigger
from dataset.annotations import ANNOTATIONS_NAME, load_annotations
from dataset.manifest import load_manifest
from geometry.transforms import Pose
from pipeline.run_config import prepare_output_dir
from utils.errors import ConfigError
from utils.logger import setup_logger

logger = setup_logger("Poison")


def trigger_spec_from(rc):
    try:
        trigger_id, mesh = resolve_trigger(rc.trigger, rc.trigger_size)
    except ValueError as e:
        raise ConfigError(str(e))
    delta = Pose.from_euler_deg(rc.delta_rot, rc.delta_trans)
    if rc.trigger_pose:
        try:
            pose = Pose.from_list(rc.trigger_pose)
        except ValueError as e:
            raise ConfigError(f"--trigger-pose: {e}")
        if not pose.is_valid():
            raise ConfigError("--trigger-pose: rotation block is not a proper rotation")
        placement = FixedPlacement(pose)
    else:
        placement = BoxPlacement()
    return TriggerSpec(
        trigger_id=trigger_id,
        trigger_mesh=mesh,
        delta_pose=delta,
        placement=placement,
        min_visible_fraction=rc.min_visible,
        keypoint_mode=rc.keypoint_mode,
        pixel_offsets=rc.px_offset,
        offset_frame=rc.offset_frame,
    )


def cmd_poison(rc):
    """Writes a poisoned copy of ``rc.dataset`` to ``rc.out``; the input is untouched."""
    source = Path(rc.dataset)
    if source.resolve() == Path(rc.out).resolve():
        raise ConfigError("--out must differ from the input dataset")
    if rc.px_offset and len(rc.px_offset) % 2:
        raise ConfigError("--px-offset takes (du, dv) pairs")
    spec = trigger_spec_from(rc)
    spec.validate()
    config = PoisonConfig(rate=rc.rate, seed=rc.seed, strategy=rc.strategy, modality=rc.modality)

    manifest = load_manifest(source)
    annotations = None
    if (source / ANNOTATIONS_NAME).exists():
        annotations = load_annotations(source / ANNOTATIONS_NAME)
    elif config.strategy == "pnp_keypoints":
        raise ConfigError(f"{source / ANNOTATIONS_NAME} is required for the pnp_keypoints strategy")

    campaign = poison_dataset(manifest, spec, config, annotations, rc.threads)
    out = prepare_output_dir(rc.out, rc.force)
    write_poisoned_dataset(campaign, out, rc.provenance())
    return 0
