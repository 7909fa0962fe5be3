from dataclasses import dataclass

import numpy as np

from geometry.transforms import transform_points
from utils.errors import DimensionMismatch, EmptyRender

# Triangles with a vertex closer than this are dropped (no near-plane clipping)
NEAR_PLANE = 1e-6
FLAT_GRAY = 128


@dataclass(frozen=True, eq=False)
class RenderFragment:
    """
    Rasterized mesh: ``depth`` (H, W) meters with 0 where uncovered,
    ``color`` (H, W, 3) uint8, ``mask`` (H, W) bool coverage.
    """
    depth: np.ndarray
    color: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.depth.shape

    @property
    def covered(self):
        return int(self.mask.sum())


def _edge(a, b, px, py):
    return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])


def _is_top_left(a, b):
    # Interior lies on the positive side of every edge (y points down).
    dx, dy = b[0] - a[0], b[1] - a[1]
    return dy < 0 or (dy == 0 and dx > 0)


def _covers(w, a, b):
    if _is_top_left(a, b):
        return w >= 0
    return w > 0


def rasterize(mesh, pose, k, width, height):
    """
    Z-buffered edge-function rasterization of ``mesh`` placed by ``pose``.

    Pixel (x, y) samples the image point (x, y), the same convention as
    ``project``. Depth and colors are interpolated perspective-correctly
    (1/z); a mesh without colors renders flat gray.
    """
    cam = transform_points(pose, mesh.vertices)
    z = cam[:, 2]
    in_front = z > NEAR_PLANE
    uv = np.full((len(cam), 2), np.nan)
    uv[in_front, 0] = k.fx * cam[in_front, 0] / z[in_front] + k.cx
    uv[in_front, 1] = k.fy * cam[in_front, 1] / z[in_front] + k.cy

    if mesh.colors is None:
        colors = np.full((len(cam), 3), FLAT_GRAY / 255.0)
    else:
        colors = mesh.colors

    zbuf = np.full((height, width), np.inf)
    cbuf = np.zeros((height, width, 3))

    for tri in mesh.triangles:
        if not np.all(in_front[tri]):
            continue
        i0, i1, i2 = (int(i) for i in tri)
        p0, p1, p2 = uv[i0], uv[i1], uv[i2]
        area = _edge(p0, p1, p2[0], p2[1])
        if area == 0:
            continue
        if area < 0:
            i1, i2 = i2, i1
            p1, p2 = p2, p1
            area = -area

        xs = (p0[0], p1[0], p2[0])
        ys = (p0[1], p1[1], p2[1])
        x0, x1 = max(int(np.ceil(min(xs))), 0), min(int(np.floor(max(xs))), width - 1)
        y0, y1 = max(int(np.ceil(min(ys))), 0), min(int(np.floor(max(ys))), height - 1)
        if x0 > x1 or y0 > y1:
            continue

        px, py = np.meshgrid(np.arange(x0, x1 + 1, dtype=float), np.arange(y0, y1 + 1, dtype=float))
        w0 = _edge(p1, p2, px, py)
        w1 = _edge(p2, p0, px, py)
        w2 = _edge(p0, p1, px, py)
        inside = _covers(w0, p1, p2) & _covers(w1, p2, p0) & _covers(w2, p0, p1)
        if not inside.any():
            continue

        l0, l1, l2 = w0 / area, w1 / area, w2 / area
        inv_z = l0 / z[i0] + l1 / z[i1] + l2 / z[i2]
        depth = 1.0 / inv_z

        region = zbuf[y0:y1 + 1, x0:x1 + 1]
        wins = inside & (depth < region)
        if not wins.any():
            continue
        region[wins] = depth[wins]
        color = (
            (l0 / z[i0])[..., None] * colors[i0]
            + (l1 / z[i1])[..., None] * colors[i1]
            + (l2 / z[i2])[..., None] * colors[i2]
        ) * depth[..., None]
        cbuf[y0:y1 + 1, x0:x1 + 1][wins] = color[wins]

    mask = np.isfinite(zbuf)
    if not mask.any():
        raise EmptyRender("mesh covers no pixels")
    depth = np.where(mask, zbuf, 0.0)
    color = np.rint(np.clip(cbuf, 0.0, 1.0) * 255.0).astype(np.uint8)
    color[~mask] = 0
    return RenderFragment(depth, color, mask)


def _check_dims(frag, depth, rgb=None):
    if depth.shape != frag.shape:
        raise DimensionMismatch(f"scene depth {depth.shape} vs fragment {frag.shape}")
    if rgb is not None and rgb.shape[:2] != frag.shape:
        raise DimensionMismatch(f"scene rgb {rgb.shape[:2]} vs fragment {frag.shape}")


def winning_mask(frag, scene_depth):
    """
    Fragment pixels that pass the z-test; missing scene depth (0) counts
    as free space.
    """
    _check_dims(frag, scene_depth)
    return frag.mask & ((scene_depth <= 0) | (frag.depth < scene_depth))


def composite(scene_rgb, scene_depth, frag, write_depth=True):
    """
    Writes fragment color and depth wherever it is nearer than the scene.
    Returns new (rgb, depth) arrays; inputs are untouched.
    """
    _check_dims(frag, scene_depth, scene_rgb)
    wins = winning_mask(frag, scene_depth)
    rgb = scene_rgb.copy()
    depth = scene_depth.copy()
    rgb[wins] = frag.color[wins]
    if write_depth:
        depth[wins] = frag.depth[wins]
    return rgb, depth


def visible_fraction(frag, scene_depth):
    _check_dims(frag, scene_depth)
    covered = frag.covered
    if covered == 0:
        return 0.0
    return float(winning_mask(frag, scene_depth).sum()) / covered


def render_or_none(mesh, pose, k, width, height):
    try:
        return rasterize(mesh, pose, k, width, height)
    except EmptyRender:
        return None
