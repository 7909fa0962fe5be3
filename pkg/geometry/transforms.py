from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from config import Config

# Compositions between polar re-projections of the rotation block
REORTHONORMALIZE_EVERY = 64
ORTHONORMAL_TOL = 1e-9


def skew(v):
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def is_rotation(m, tol=ORTHONORMAL_TOL):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return bool(
        np.allclose(m.T @ m, np.eye(3), rtol=0.0, atol=tol)
        and abs(np.linalg.det(m) - 1.0) <= tol
    )


def orthonormalize(m):
    """
    Nearest rotation matrix (polar decomposition via SVD).
    """
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt)) or 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


def axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float).reshape(3)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValueError("axis must be non-zero")
    return Rotation.from_rotvec(axis / norm * angle).as_matrix()


def rot_x(deg):
    return axis_angle([1.0, 0.0, 0.0], np.deg2rad(deg))


def rot_y(deg):
    return axis_angle([0.0, 1.0, 0.0], np.deg2rad(deg))


def rot_z(deg):
    return axis_angle([0.0, 0.0, 1.0], np.deg2rad(deg))


def random_rotation(rng):
    """Uniformly distributed rotation drawn from ``rng``."""
    return Rotation.random(random_state=rng).as_matrix()


@dataclass(frozen=True, eq=False)
class Pose:
    """
    Rigid transform x -> R x + t (object frame to camera frame, meters).

    ``chain`` counts compositions since the rotation was last re-projected
    onto SO(3); it does not take part in comparisons.
    """
    rotation: np.ndarray
    translation: np.ndarray
    chain: int = field(default=0)

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, x, y, z):
        return cls(np.eye(3), [x, y, z])

    @classmethod
    def from_rotvec(cls, rotvec, translation=(0.0, 0.0, 0.0)):
        return cls(Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix(), translation)

    @classmethod
    def from_euler_deg(cls, angles, translation=(0.0, 0.0, 0.0)):
        return cls(Rotation.from_euler("xyz", angles, degrees=True).as_matrix(), translation)

    @classmethod
    def from_list(cls, values):
        """12 floats: row-major rotation followed by translation."""
        values = np.asarray(values, dtype=float)
        if values.shape != (12,):
            raise ValueError(f"pose needs 12 values, got {values.size}")
        return cls(values[:9].reshape(3, 3), values[9:])

    def to_list(self):
        return [float(v) for v in self.rotation.reshape(-1)] + [float(v) for v in self.translation]

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def is_valid(self, tol=1e-6):
        return is_rotation(self.rotation, tol) and bool(np.all(np.isfinite(self.translation)))

    def allclose(self, other, atol=1e-9):
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )

    def __repr__(self):
        rotvec = Rotation.from_matrix(self.rotation).as_rotvec()
        return f"Pose(rotvec={np.round(rotvec, 6).tolist()}, t={np.round(self.translation, 6).tolist()})"


def compose(a, b):
    """
    a o b: applies b first, then a.
    """
    rotation = a.rotation @ b.rotation
    chain = max(a.chain, b.chain) + 1
    if chain >= REORTHONORMALIZE_EVERY:
        rotation = orthonormalize(rotation)
        chain = 0
    return Pose(rotation, a.rotation @ b.translation + a.translation, chain)


def inverse(p):
    rt = p.rotation.T
    return Pose(rt, -rt @ p.translation, p.chain)


def transform_point(p, x):
    return p.rotation @ np.asarray(x, dtype=float).reshape(3) + p.translation


def transform_points(p, points):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    return points @ p.rotation.T + p.translation


def rotation_angle(a, b):
    """
    Geodesic angle between two rotations, in [0, pi].
    """
    a = a.rotation if isinstance(a, Pose) else np.asarray(a, dtype=float)
    b = b.rotation if isinstance(b, Pose) else np.asarray(b, dtype=float)
    cos_theta = (np.trace(a @ b.T) - 1.0) * 0.5
    return float(np.arccos(np.clip(cos_theta, -1.0, 1.0)))


def apply_offset(gt, delta, frame=None):
    """
    Attacker target pose.

    ``frame="camera"`` composes the offset on the left (delta o gt), so the
    offset is expressed in the camera frame; ``"object"`` composes on the
    right (gt o delta).
    """
    frame = (frame or Config.OFFSET_FRAME).lower()
    if frame == "camera":
        return compose(delta, gt)
    if frame == "object":
        return compose(gt, delta)
    raise ValueError(f"Unknown offset frame: {frame}")


def remove_offset(target, delta, frame=None):
    """Inverse of apply_offset for the same frame."""
    frame = (frame or Config.OFFSET_FRAME).lower()
    if frame == "camera":
        return compose(inverse(delta), target)
    if frame == "object":
        return compose(target, inverse(delta))
    raise ValueError(f"Unknown offset frame: {frame}")


def interpolate(start, end, weight):
    """
    Shortest-arc rotation and linear translation blend; weight 0 gives
    ``start`` exactly, weight 1 gives ``end``.
    """
    relative = end.rotation @ start.rotation.T
    rotvec = Rotation.from_matrix(relative).as_rotvec()
    rotation = Rotation.from_rotvec(weight * rotvec).as_matrix() @ start.rotation
    translation = (1.0 - weight) * start.translation + weight * end.translation
    return Pose(rotation, translation)
