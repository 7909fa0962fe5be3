from abc import ABC, abstractmethod

import numpy as np

from geometry.camera import back_project
from geometry.transforms import Pose, random_rotation
from rendering.image_io import quantize_depth
from rendering.rasterizer import composite, render_or_none


class PoseSampler(ABC):
    """
    Source of object-to-camera poses. Implementations draw all randomness
    from the generator they are given.
    """

    @abstractmethod
    def sample(self, rng) -> Pose:
        pass


class FixedPoseSampler(PoseSampler):
    def __init__(self, pose):
        self.pose = pose

    def sample(self, rng):
        return self.pose


class UniformPoseSampler(PoseSampler):
    """
    Translation uniform in a camera-frame box; lateral ranges scale with
    depth so the object stays near the optical axis. Rotation uniform on
    SO(3) unless ``rotate`` is False.
    """

    def __init__(self, z_range=(0.6, 1.2), lateral=0.08, rotate=True):
        self.z_range = (float(z_range[0]), float(z_range[1]))
        self.lateral = float(lateral)
        self.rotate = rotate

    def sample(self, rng):
        z = rng.uniform(*self.z_range)
        x, y = rng.uniform(-self.lateral, self.lateral, size=2) * z
        rotation = random_rotation(rng) if self.rotate else np.eye(3)
        return Pose(rotation, [x, y, z])


class ImagePlaneSampler(PoseSampler):
    """
    Uniform image position (with margin) back-projected to a depth drawn
    from ``depth_range``; uniform rotation.
    """

    def __init__(self, k, width, height, depth_range, margin=0.1):
        self.k = k
        self.width = width
        self.height = height
        self.depth_range = (float(depth_range[0]), float(depth_range[1]))
        self.margin = margin

    def sample(self, rng):
        u = rng.uniform(self.margin * self.width, (1.0 - self.margin) * self.width)
        v = rng.uniform(self.margin * self.height, (1.0 - self.margin) * self.height)
        z = rng.uniform(*self.depth_range)
        return Pose(random_rotation(rng), back_project(self.k, u, v, z))


class Background(ABC):
    """
    Scene content behind the labeled object: returns (rgb uint8, depth m).
    """

    @abstractmethod
    def render(self, k, width, height, rng):
        pass


class FlatBackground(Background):
    """Constant color; depth 0 (no measurement) unless ``depth`` is given."""

    def __init__(self, color=(40, 40, 40), depth=0.0):
        self.color = np.asarray(color, dtype=np.uint8)
        self.depth = float(depth)

    def render(self, k, width, height, rng):
        rgb = np.empty((height, width, 3), dtype=np.uint8)
        rgb[:] = self.color
        return rgb, np.full((height, width), self.depth)


class CheckerboardBackground(Background):
    """Fronto-parallel checkerboard plane at depth ``z``."""

    def __init__(self, z=2.0, square=16, colors=((200, 200, 200), (60, 60, 60))):
        self.z = float(z)
        self.square = int(square)
        self.colors = np.asarray(colors, dtype=np.uint8)

    def render(self, k, width, height, rng):
        ys, xs = np.mgrid[0:height, 0:width]
        parity = ((xs // self.square) + (ys // self.square)) % 2
        return self.colors[parity], np.full((height, width), self.z)


class ClutterBackground(Background):
    """
    Unlabeled extra meshes rendered over a base background, each at a pose
    from ``sampler``. Meshes that land off-screen are left out.
    """

    def __init__(self, meshes, sampler=None, base=None):
        self.meshes = list(meshes)
        self.sampler = sampler or UniformPoseSampler(z_range=(0.8, 1.6), lateral=0.25)
        self.base = base or FlatBackground()

    def render(self, k, width, height, rng):
        rgb, depth = self.base.render(k, width, height, rng)
        for mesh in self.meshes:
            frag = render_or_none(mesh, self.sampler.sample(rng), k, width, height)
            if frag is not None:
                rgb, depth = composite(rgb, depth, frag)
        return rgb, quantize_depth(depth)
