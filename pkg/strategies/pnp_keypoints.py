from attack.poisoning import poison_record_pnp
from strategies.base import PoisonStrategy
from utils.errors import ConfigError


class PnPKeypointStrategy(PoisonStrategy):
    """Trigger in the image, 2D keypoint labels shifted per keypoint_mode."""

    name = "pnp_keypoints"

    def prepare(self, annotations):
        if annotations is None:
            raise ConfigError("pnp_keypoints strategy needs keypoint annotations")

    def poison(self, record, rgb, depth, annotation=None):
        if annotation is None:
            raise ConfigError(f"{record.id}: no keypoint annotation")
        poisoned, result = poison_record_pnp(
            annotation, record, rgb, depth, self.spec, self.config.seed, self.config.modality
        )
        return result, poisoned
