import numpy as np
from scipy.spatial.transform import Rotation

from geometry.camera import MIN_DEPTH
from geometry.transforms import Pose, orthonormalize, skew
from pnp.settings import SolverSettings
from utils.errors import DegenerateConfiguration, NonConvergent, NonPositiveDepth
from utils.logger import setup_logger

logger = setup_logger("PnP")

RANK_TOL = 1e-10
EXACT_FIT = 1e-24


def _normalized(kp2d, k):
    return np.stack([(kp2d[:, 0] - k.cx) / k.fx, (kp2d[:, 1] - k.cy) / k.fy], axis=1)


def _similarity(points):
    """Hartley normalization: centroid to origin, mean distance sqrt(dim)."""
    dim = points.shape[1]
    centroid = points.mean(axis=0)
    mean_dist = np.linalg.norm(points - centroid, axis=1).mean()
    scale = np.sqrt(dim) / mean_dist if mean_dist > 0 else 1.0
    t = np.eye(dim + 1)
    t[:dim, :dim] *= scale
    t[:dim, dim] = -scale * centroid
    return t


def _structure_rank(kp3d):
    centered = kp3d - kp3d.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] <= 0:
        return 0, s
    return int(np.sum(s > RANK_TOL * s[0])), s


def _positive_depth(r, t, kp3d):
    return float(np.mean(kp3d @ r.T + t, axis=0)[2]) > 0


def dlt_pose(kp2d, kp3d, k):
    """
    Linear pose from >= 6 non-coplanar correspondences: 12-parameter DLT on
    normalized image coordinates, rotation projected onto SO(3).
    """
    xn = _normalized(kp2d, k)
    t3 = _similarity(kp3d)
    xh = (np.hstack([kp3d, np.ones((len(kp3d), 1))]) @ t3.T)

    a = np.zeros((2 * len(kp3d), 12))
    a[0::2, 0:4] = xh
    a[0::2, 8:12] = -xn[:, :1] * xh
    a[1::2, 4:8] = xh
    a[1::2, 8:12] = -xn[:, 1:] * xh
    _, s, vt = np.linalg.svd(a)
    if s[-2] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration("DLT system is rank deficient")

    p = vt[-1].reshape(3, 4) @ t3
    if np.mean(np.hstack([kp3d, np.ones((len(kp3d), 1))]) @ p[2]) < 0:
        p = -p
    u, sv, vt3 = np.linalg.svd(p[:, :3])
    rotation = u @ vt3
    if np.linalg.det(rotation) < 0:
        raise DegenerateConfiguration("DLT produced a reflection")
    scale = sv.mean()
    return Pose(rotation, p[:, 3] / scale)


def _homography(src, dst):
    ts, td = _similarity(src), _similarity(dst)
    sh = np.hstack([src, np.ones((len(src), 1))]) @ ts.T
    dh = np.hstack([dst, np.ones((len(dst), 1))]) @ td.T
    a = np.zeros((2 * len(src), 9))
    a[0::2, 0:3] = sh
    a[0::2, 6:9] = -dh[:, :1] * sh
    a[1::2, 3:6] = sh
    a[1::2, 6:9] = -dh[:, 1:2] * sh
    _, s, vt = np.linalg.svd(a)
    if s[-2] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration("homography system is rank deficient")
    return np.linalg.inv(td) @ vt[-1].reshape(3, 3) @ ts


def planar_pose(kp2d, kp3d, k):
    """
    Linear pose for coplanar (non-collinear) 3D points via the plane-to-image
    homography.
    """
    centroid = kp3d.mean(axis=0)
    _, _, vt = np.linalg.svd(kp3d - centroid)
    basis = vt.T
    if np.linalg.det(basis) < 0:
        basis[:, 2] = -basis[:, 2]
    plane = (kp3d - centroid) @ basis
    h = _homography(plane[:, :2], _normalized(kp2d, k))

    lam = 0.5 * (np.linalg.norm(h[:, 0]) + np.linalg.norm(h[:, 1]))
    h = h / lam
    if h[2, 2] < 0:
        h = -h
    r_plane = orthonormalize(np.column_stack([h[:, 0], h[:, 1], np.cross(h[:, 0], h[:, 1])]))
    t_plane = h[:, 2]
    rotation = r_plane @ basis.T
    return Pose(rotation, t_plane - rotation @ centroid)


def reprojection_residuals(pose, kp2d, kp3d, k):
    """Stacked (u, v) residuals and camera-frame points."""
    cam = kp3d @ pose.rotation.T + pose.translation
    z = cam[:, 2]
    if np.any(z <= MIN_DEPTH):
        raise NonPositiveDepth("keypoint behind camera during refinement")
    u = k.fx * cam[:, 0] / z + k.cx
    v = k.fy * cam[:, 1] / z + k.cy
    return np.stack([u - kp2d[:, 0], v - kp2d[:, 1]], axis=1).reshape(-1), cam


def _jacobian(cam, k):
    """d(residual)/d(omega, dt) for the left perturbation exp(omega) R, t + dt."""
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
    n = len(cam)
    dproj = np.zeros((n, 2, 3))
    dproj[:, 0, 0] = k.fx / z
    dproj[:, 0, 2] = -k.fx * x / z ** 2
    dproj[:, 1, 1] = k.fy / z
    dproj[:, 1, 2] = -k.fy * y / z ** 2
    j = np.zeros((n, 2, 6))
    # d(exp(w) X_c)/dw = -[X_c]x
    for i in range(n):
        j[i, :, :3] = dproj[i] @ -skew(cam[i])
        j[i, :, 3:] = dproj[i]
    return j.reshape(-1, 6)


def refine_pose(pose, kp2d, kp3d, k, settings):
    """
    Damped Gauss-Newton on the squared reprojection error over the 6-dim
    tangent (rotation vector, translation). Steps that do not decrease the
    cost are halved up to ``max_step_halvings`` times, so the cost never
    rises; returns (pose, cost, initial_cost). Raises NonConvergent when the
    starting cost is not finite.
    """
    residual, cam = reprojection_residuals(pose, kp2d, kp3d, k)
    cost = initial_cost = float(residual @ residual)
    if not np.isfinite(cost):
        raise NonConvergent(f"reprojection cost is {cost} at the initial pose")

    for iteration in range(settings.gn_max_iters):
        if cost <= EXACT_FIT:
            break
        # t' = exp(w) t + dt so that X_c' = exp(w) X_c + dt
        jac = _jacobian(cam, k)
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)

        accepted = False
        scale = 1.0
        for _ in range(settings.max_step_halvings + 1):
            delta = Rotation.from_rotvec(scale * step[:3]).as_matrix()
            candidate = Pose(
                orthonormalize(delta @ pose.rotation),
                delta @ pose.translation + scale * step[3:],
            )
            try:
                new_residual, new_cam = reprojection_residuals(candidate, kp2d, kp3d, k)
            except NonPositiveDepth:
                scale *= 0.5
                continue
            new_cost = float(new_residual @ new_residual)
            if new_cost < cost:
                accepted = True
                break
            scale *= 0.5

        if not accepted:
            logger.debug(f"GN stopped at iteration {iteration}: no decreasing step")
            break
        decrease = cost - new_cost
        pose, residual, cam, cost = candidate, new_residual, new_cam, new_cost
        if decrease <= settings.gn_tol * max(cost + decrease, 1e-300):
            break
    return pose, cost, initial_cost


def solve_pnp(kp2d, kp3d, k, settings=None, initial_pose=None):
    """
    Pose from ordered 2D-3D keypoint correspondences.

    Without ``initial_pose``: >= 6 correspondences (>= 4 when coplanar),
    linear initialization (DLT, or a plane homography for coplanar
    keypoints) followed by Gauss-Newton. With ``initial_pose``: >= 4 correspondences, refinement
    only.
    """
    settings = settings or SolverSettings()
    kp2d = np.asarray(kp2d, dtype=float).reshape(-1, 2)
    kp3d = np.asarray(kp3d, dtype=float).reshape(-1, 3)
    n = len(kp3d)
    if len(kp2d) != n:
        raise ValueError(f"{len(kp2d)} 2D vs {n} 3D keypoints")
    if n < 4:
        raise DegenerateConfiguration(f"{n} correspondences, need at least 4")
    if not (np.all(np.isfinite(kp2d)) and np.all(np.isfinite(kp3d))):
        raise DegenerateConfiguration("non-finite keypoint coordinates")
    rank, _ = _structure_rank(kp3d)
    if rank < 2:
        raise DegenerateConfiguration("3D keypoints are collinear")
    minimum = 4 if initial_pose is not None or rank == 2 else 6
    if n < minimum:
        raise DegenerateConfiguration(f"{n} correspondences, need at least {minimum}")

    if initial_pose is not None:
        pose = initial_pose
    elif rank == 2:
        pose = planar_pose(kp2d, kp3d, k)
    else:
        pose = dlt_pose(kp2d, kp3d, k)

    if not _positive_depth(pose.rotation, pose.translation, kp3d):
        raise NonPositiveDepth("initial pose puts keypoints behind the camera")

    pose, cost, initial_cost = refine_pose(pose, kp2d, kp3d, k, settings)
    if not _positive_depth(pose.rotation, pose.translation, kp3d):
        raise NonPositiveDepth("solved pose puts keypoints behind the camera")
    logger.debug(f"PnP: cost {initial_cost:.3g} -> {cost:.3g}")
    return pose
