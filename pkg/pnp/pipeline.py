from pnp.settings import SolverSettings
from pnp.solver import solve_pnp
from pnp.vector_field import build_vector_field
from pnp.voting import vote_keypoints
from rendering.rasterizer import rasterize


def recover_pose_from_field(field, kp3d, k, settings=None):
    """Vote keypoints from ``field``, then solve PnP against ``kp3d``."""
    settings = settings or SolverSettings()
    estimate = vote_keypoints(field, settings)
    pose = solve_pnp(estimate.keypoints, kp3d, k, settings)
    return pose, estimate


def object_mask(mesh, pose, k, width, height):
    """Silhouette of ``mesh`` at ``pose``."""
    return rasterize(mesh, pose, k, width, height).mask


def recover_pose_from_keypoints(kp2d, kp3d, mask, k, settings=None):
    """
    Field over ``mask`` pointing at ``kp2d``, voted and solved: the path a
    trained keypoint-voting network would take if it reproduced its labels.
    """
    return recover_pose_from_field(build_vector_field(mask, kp2d), kp3d, k, settings)
