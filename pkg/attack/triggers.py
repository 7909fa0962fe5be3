from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config import Config
from dataset.samplers import ImagePlaneSampler
from geometry.mesh import TriMesh, make_box, resolve_mesh
from geometry.transforms import Pose, rotation_angle
from utils.errors import ConfigError
from utils.logger import setup_logger

logger = setup_logger("Triggers")

STRATEGIES = ("end_to_end", "pnp_keypoints")
MODALITIES = ("rgbd", "rgb")
KEYPOINT_MODES = ("reproject", "constant_px")

# Saturated colors so a trigger never blends into the scene
TRIGGER_COLORS = {
    "cube": (1.0, 0.0, 1.0),
    "pyramid": (0.0, 1.0, 1.0),
    "octahedron": (1.0, 1.0, 0.0),
}


def _solid(vertices, triangles, color):
    vertices = np.asarray(vertices, dtype=float)
    return TriMesh(vertices, triangles, np.tile(np.asarray(color, dtype=float), (len(vertices), 1)))


def make_trigger_mesh(kind="cube", size=None):
    """
    Built-in trigger shapes, centered on the origin with edge length (cube)
    or extent (pyramid, octahedron) ``size`` meters.
    """
    size = Config.TRIGGER_SIZE if size is None else float(size)
    if size <= 0:
        raise ConfigError(f"trigger size must be positive, got {size}")
    h = size / 2.0
    if kind == "cube":
        return make_box(size, colors=np.tile(TRIGGER_COLORS["cube"], (8, 1)))
    if kind == "pyramid":
        vertices = [[-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h], [0.0, 0.0, h]]
        triangles = [(0, 2, 1), (0, 3, 2), (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)]
        return _solid(vertices, triangles, TRIGGER_COLORS["pyramid"])
    if kind == "octahedron":
        vertices = [[h, 0, 0], [-h, 0, 0], [0, h, 0], [0, -h, 0], [0, 0, h], [0, 0, -h]]
        triangles = [
            (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
            (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
        ]
        return _solid(vertices, triangles, TRIGGER_COLORS["octahedron"])
    raise ConfigError(f"unknown trigger kind '{kind}' (choose from {sorted(TRIGGER_COLORS)})")


def resolve_trigger(spec, size=None):
    """
    ``builtin:<kind>`` or a mesh path (a real-object trigger). Returns
    (trigger_id, mesh).
    """
    spec = str(spec)
    if spec.startswith("builtin:"):
        kind = spec.split(":", 1)[1]
        return kind, make_trigger_mesh(kind, size)
    return Path(spec).stem, resolve_mesh(spec)


class TriggerPlacement(ABC):
    """Where a trigger goes in one image, given the labeled object's pose."""

    @abstractmethod
    def sample(self, k, width, height, object_pose, rng) -> Pose:
        pass


class FixedPlacement(TriggerPlacement):
    def __init__(self, pose):
        self.pose = pose

    def sample(self, k, width, height, object_pose, rng):
        return self.pose


class BoxPlacement(TriggerPlacement):
    """
    Uniform image position inside a ``margin`` border, depth uniform within
    +/- ``depth_spread`` of the object's depth, uniform rotation.
    """

    def __init__(self, margin=0.1, depth_spread=0.3):
        if not 0.0 <= depth_spread < 1.0:
            raise ConfigError("depth_spread must lie in [0, 1)")
        self.margin = margin
        self.depth_spread = depth_spread

    def sample(self, k, width, height, object_pose, rng):
        z = float(object_pose.translation[2])
        depth_range = (z * (1.0 - self.depth_spread), z * (1.0 + self.depth_spread))
        return ImagePlaneSampler(k, width, height, depth_range, self.margin).sample(rng)


@dataclass(frozen=True, eq=False)
class TriggerSpec:
    """
    Everything about the trigger and the label rewrite. ``pixel_offsets``
    is used by the constant_px keypoint mode: one (du, dv) for every
    keypoint, or one row per keypoint.
    """
    trigger_id: str
    trigger_mesh: TriMesh
    delta_pose: Pose
    placement: TriggerPlacement = field(default_factory=BoxPlacement)
    min_visible_fraction: float = field(default_factory=lambda: Config.MIN_VISIBLE_FRACTION)
    keypoint_mode: str = "reproject"
    pixel_offsets: np.ndarray = None
    offset_frame: str = field(default_factory=lambda: Config.OFFSET_FRAME)

    def __post_init__(self):
        if self.keypoint_mode not in KEYPOINT_MODES:
            raise ConfigError(f"unknown keypoint mode '{self.keypoint_mode}'")
        if not 0.0 <= self.min_visible_fraction <= 1.0:
            raise ConfigError("min_visible_fraction must lie in [0, 1]")
        if self.offset_frame not in ("camera", "object"):
            raise ConfigError(f"unknown offset frame '{self.offset_frame}'")
        offsets = np.zeros((1, 2)) if self.pixel_offsets is None else np.array(self.pixel_offsets, dtype=float)
        object.__setattr__(self, "pixel_offsets", offsets.reshape(-1, 2))

    def validate(self):
        """
        Returns warnings about settings that make the attack unmeasurable;
        each is also logged.
        """
        warnings = []
        shift = float(np.linalg.norm(self.delta_pose.translation))
        angle = np.degrees(rotation_angle(self.delta_pose.rotation, np.eye(3)))
        if shift <= Config.TRANSLATION_MAX and angle <= Config.ROTATION_MAX_DEG:
            warnings.append(
                f"offset ({shift:.3f} m, {angle:.2f} deg) exceeds neither the "
                f"{Config.TRANSLATION_MAX} m nor the {Config.ROTATION_MAX_DEG} deg threshold: "
                "attack success is unreachable"
            )
        if self.keypoint_mode == "constant_px" and not np.any(self.pixel_offsets):
            warnings.append("constant_px mode with all-zero pixel offsets leaves keypoints unchanged")
        for message in warnings:
            logger.warning(message)
        return warnings


@dataclass(frozen=True)
class PoisonConfig:
    rate: float = field(default_factory=lambda: Config.POISON_RATE)
    seed: int = 0
    strategy: str = "end_to_end"
    modality: str = "rgbd"

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"poison rate must lie in [0, 1], got {self.rate}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy '{self.strategy}'")
        if self.modality not in MODALITIES:
            raise ConfigError(f"unknown modality '{self.modality}'")
