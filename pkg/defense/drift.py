import numpy as np

from geometry.transforms import Pose, interpolate
from pnp.predictions import Prediction
from utils.errors import ConfigError, MissingTargetPose
from utils.seeding import rng_for

JITTER_TRANSLATION = 0.001  # meters
JITTER_ROTATION_DEG = 0.1


def jittered(pose, rng):
    """``pose`` perturbed by a small camera-frame rotation and shift."""
    rotvec = rng.normal(0.0, np.radians(JITTER_ROTATION_DEG), size=3)
    shift = rng.normal(0.0, JITTER_TRANSLATION, size=3)
    return Pose(Pose.from_rotvec(rotvec).rotation @ pose.rotation, pose.translation + shift)


def simulate_drifted_predictions(manifest, drift, seed=0):
    """
    Stand-in for a backdoored model after clean-data retraining. Triggered
    records are predicted between the target (drift 0) and the ground truth
    (drift 1); clean records at the ground truth plus seeded jitter.
    """
    drift = float(drift)
    if not 0.0 <= drift <= 1.0:
        raise ConfigError(f"drift must lie in [0, 1], got {drift}")
    predictions = []
    for record in manifest.records:
        if record.is_poisoned:
            poison = record.poison
            if poison.target_pose is None:
                raise MissingTargetPose(f"{record.id} is marked poisoned but has no target pose")
            pose = interpolate(poison.target_pose, poison.original_gt_pose, drift)
        else:
            pose = jittered(record.gt_pose, rng_for(seed, f"jitter/{record.id}"))
        predictions.append(Prediction(record.id, pose))
    return predictions
