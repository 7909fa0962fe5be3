from dataclasses import dataclass

import numpy as np

from utils.errors import EmptyMask


@dataclass(frozen=True, eq=False)
class VectorField:
    """
    Per keypoint k and masked pixel p, the unit vector from p towards the
    keypoint. ``vectors`` is (K, H, W, 2); pixels sitting exactly on a
    keypoint hold (0, 0) and are flagged in ``degenerate``.
    """
    vectors: np.ndarray
    mask: np.ndarray
    degenerate: np.ndarray

    @property
    def width(self):
        return self.mask.shape[1]

    @property
    def height(self):
        return self.mask.shape[0]

    @property
    def num_keypoints(self):
        return self.vectors.shape[0]

    def pixels(self, k):
        """(pixels (N, 2) as x, y; unit directions (N, 2)) usable for voting."""
        usable = self.mask & ~self.degenerate[k]
        ys, xs = np.nonzero(usable)
        return np.stack([xs, ys], axis=1).astype(float), self.vectors[k][usable]


def build_vector_field(mask, keypoints2d):
    mask = np.asarray(mask, dtype=bool)
    keypoints2d = np.asarray(keypoints2d, dtype=float).reshape(-1, 2)
    if not mask.any():
        raise EmptyMask("vector field needs at least one masked pixel")
    if not np.all(np.isfinite(keypoints2d)):
        raise ValueError("keypoints must be finite")

    ys, xs = np.nonzero(mask)
    pixels = np.stack([xs, ys], axis=1).astype(float)
    height, width = mask.shape
    vectors = np.zeros((len(keypoints2d), height, width, 2))
    degenerate = np.zeros((len(keypoints2d), height, width), dtype=bool)

    for k, keypoint in enumerate(keypoints2d):
        diff = keypoint - pixels
        norm = np.linalg.norm(diff, axis=1)
        on_keypoint = norm == 0.0
        unit = np.zeros_like(diff)
        unit[~on_keypoint] = diff[~on_keypoint] / norm[~on_keypoint, None]
        vectors[k, ys, xs] = unit
        degenerate[k, ys[on_keypoint], xs[on_keypoint]] = True
    return VectorField(vectors, mask, degenerate)


def corrupt_field(field, fraction, seed_rng):
    """
    Copy of ``field`` with ``fraction`` of each keypoint's masked vectors
    replaced by random unit directions.
    """
    vectors = field.vectors.copy()
    ys, xs = np.nonzero(field.mask)
    count = int(round(fraction * len(ys)))
    for k in range(field.num_keypoints):
        pick = seed_rng.choice(len(ys), size=count, replace=False)
        angle = seed_rng.uniform(0.0, 2.0 * np.pi, size=count)
        vectors[k, ys[pick], xs[pick]] = np.stack([np.cos(angle), np.sin(angle)], axis=1)
    return VectorField(vectors, field.mask, field.degenerate)
