from dataclasses import dataclass

import numpy as np

from utils.errors import NonPositiveDepth

MIN_DEPTH = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels (no distortion)."""
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @classmethod
    def from_list(cls, values):
        fx, fy, cx, cy = (float(v) for v in values)
        return cls(fx, fy, cx, cy)

    def to_list(self):
        return [self.fx, self.fy, self.cx, self.cy]

    def matrix(self):
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])


def project_camera_points(k, points_cam):
    """
    Pixels of camera-frame points. Raises NonPositiveDepth if any point
    sits at or behind the camera.
    """
    points_cam = np.asarray(points_cam, dtype=float).reshape(-1, 3)
    z = points_cam[:, 2]
    if np.any(z <= MIN_DEPTH):
        raise NonPositiveDepth(f"{int(np.sum(z <= MIN_DEPTH))} point(s) at non-positive depth")
    u = k.fx * points_cam[:, 0] / z + k.cx
    v = k.fy * points_cam[:, 1] / z + k.cy
    return np.stack([u, v], axis=1)


def project_points(k, pose, points):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    return project_camera_points(k, points @ pose.rotation.T + pose.translation)


def project(k, pose, x):
    """u = fx X/Z + cx, v = fy Y/Z + cy for the camera-frame point R x + t."""
    return project_points(k, pose, x)[0]


def project_points_partial(k, pose, points):
    """
    Like project_points, but returns (pixels, valid) instead of raising;
    pixels of invalid points are NaN.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    cam = points @ pose.rotation.T + pose.translation
    valid = cam[:, 2] > MIN_DEPTH
    pixels = np.full((len(points), 2), np.nan)
    if np.any(valid):
        pixels[valid] = project_camera_points(k, cam[valid])
    return pixels, valid


def back_project(k, u, v, depth):
    """Camera-frame point seen at pixel (u, v) with the given depth."""
    return np.array([(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth])
