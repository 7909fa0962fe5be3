from dataclasses import dataclass

import numpy as np

from pnp.settings import SolverSettings
from utils.errors import NoConsensus, TooFewPixels
from utils.logger import setup_logger
from utils.seeding import rng_for

logger = setup_logger("Voting")

PARALLEL_EPS = 1e-12
HYPOTHESIS_BLOCK = 16


@dataclass(frozen=True, eq=False)
class KeypointEstimate:
    """
    Voted 2D keypoints in canonical order, with the inlier count and the
    2x2 hypothesis spread (pixel^2) of each.
    """
    keypoints: np.ndarray
    inlier_counts: np.ndarray
    spreads: np.ndarray


def ray_hypotheses(pixels, directions, pairs):
    """
    Intersections of the ray pairs (p_i + s d_i). Returns (points, valid);
    parallel pairs are invalid.
    """
    p1, d1 = pixels[pairs[:, 0]], directions[pairs[:, 0]]
    p2, d2 = pixels[pairs[:, 1]], directions[pairs[:, 1]]
    rhs = p2 - p1
    det = d2[:, 0] * d1[:, 1] - d1[:, 0] * d2[:, 1]
    valid = np.abs(det) > PARALLEL_EPS
    safe = np.where(valid, det, 1.0)
    s = (d2[:, 0] * rhs[:, 1] - rhs[:, 0] * d2[:, 1]) / safe
    return p1 + s[:, None] * d1, valid


def ray_cosines(points, pixels, directions):
    """
    cos of the angle between each pixel's direction and the vector from the
    pixel to each point; (len(points), len(pixels)). A pixel on the point
    counts as aligned.
    """
    diff = points[:, None, :] - pixels[None, :, :]
    norm = np.linalg.norm(diff, axis=2)
    dot = np.einsum("hnc,nc->hn", diff, directions)
    return np.where(norm > 0, dot / np.where(norm > 0, norm, 1.0), 1.0)


def intersect_rays(pixels, directions):
    """
    Least-squares point closest to all rays, or None when the rays are
    (numerically) parallel.
    """
    outer = np.einsum("ni,nj->ij", directions, directions)
    a = len(pixels) * np.eye(2) - outer
    b = pixels.sum(axis=0) - np.einsum("ni,nj,nj->i", directions, directions, pixels)
    if np.linalg.cond(a) > 1e12:
        return None
    return np.linalg.solve(a, b)


def _vote_one(pixels, directions, settings, rng):
    n = len(pixels)
    first = rng.integers(n, size=settings.ransac_hypotheses)
    second = (first + rng.integers(1, n, size=settings.ransac_hypotheses)) % n
    hypotheses, valid = ray_hypotheses(pixels, directions, np.stack([first, second], axis=1))

    counts = np.full(len(hypotheses), -1, dtype=np.int64)
    for start in range(0, len(hypotheses), HYPOTHESIS_BLOCK):
        block = slice(start, start + HYPOTHESIS_BLOCK)
        cos = ray_cosines(hypotheses[block], pixels, directions)
        counts[block] = np.where(valid[block], (cos >= settings.inlier_cos_threshold).sum(axis=1), -1)

    best = int(np.argmax(counts))
    if counts[best] < settings.min_inlier_ratio * n:
        raise NoConsensus(f"best hypothesis has {max(counts[best], 0)}/{n} inliers")

    inliers = ray_cosines(hypotheses[best:best + 1], pixels, directions)[0] >= settings.inlier_cos_threshold
    keypoint = intersect_rays(pixels[inliers], directions[inliers])
    if keypoint is None:
        keypoint = hypotheses[best]

    weights = np.where(valid, np.maximum(counts, 0), 0).astype(float)
    if weights.sum() > 0:
        diff = hypotheses[valid] - keypoint
        w = weights[valid] / weights.sum()
        spread = np.einsum("n,ni,nj->ij", w, diff, diff)
    else:
        spread = np.zeros((2, 2))
    return keypoint, int(inliers.sum()), spread


def vote_keypoints(field, settings=None):
    """
    RANSAC keypoint localization: hypotheses are intersections of seeded
    random pixel-ray pairs, inliers pass the cosine test, and the winner is
    refined to the least-squares intersection of its inlier rays.
    """
    settings = settings or SolverSettings()
    keypoints, counts, spreads = [], [], []
    for k in range(field.num_keypoints):
        pixels, directions = field.pixels(k)
        if len(pixels) < 2:
            raise TooFewPixels(f"keypoint {k}: {len(pixels)} usable pixel(s)")
        keypoint, count, spread = _vote_one(pixels, directions, settings, rng_for(settings.seed, f"vote/{k}"))
        keypoints.append(keypoint)
        counts.append(count)
        spreads.append(spread)
        logger.debug(f"keypoint {k}: {count}/{len(pixels)} inliers at {keypoint}")
    return KeypointEstimate(np.array(keypoints), np.array(counts), np.array(spreads))
