import numpy as np
import pytest

from geometry.camera import back_project
from geometry.mesh import TriMesh, make_box
from geometry.transforms import Pose, random_rotation
from rendering.rasterizer import composite, rasterize, visible_fraction, winning_mask
from utils.errors import DimensionMismatch, EmptyRender

W, H = 320, 240


def plate_at(z, half=0.2, color=(1.0, 0.0, 0.0)):
    """Fronto-parallel square at depth ``z`` in camera coordinates."""
    vertices = [[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]]
    return TriMesh(vertices, [(0, 1, 2), (0, 2, 3)], np.tile(color, (4, 1)))


def test_constant_depth_plane(k):
    frag = rasterize(plate_at(2.0), Pose.identity(), k, W, H)
    assert frag.mask[120, 160]
    assert frag.depth[120, 160] == pytest.approx(2.0, abs=1e-12)
    assert tuple(frag.color[120, 160]) == (255, 0, 0)


def test_mesh_behind_camera_is_empty(k):
    with pytest.raises(EmptyRender):
        rasterize(plate_at(-2.0), Pose.identity(), k, W, H)


def test_z_buffer_keeps_nearest(k):
    near, far = plate_at(1.0, 0.05), plate_at(2.0, 0.2)
    both = TriMesh(
        np.vstack([far.vertices, near.vertices]),
        np.vstack([far.triangles, near.triangles + 4]),
        np.vstack([far.colors, near.colors]),
    )
    frag = rasterize(both, Pose.identity(), k, W, H)
    near_only = rasterize(near, Pose.identity(), k, W, H).mask
    np.testing.assert_allclose(frag.depth[near_only], 1.0, atol=1e-12)
    np.testing.assert_allclose(frag.depth[frag.mask & ~near_only], 2.0, atol=1e-12)


def test_shared_edge_pixels_are_covered_once(k):
    # the diagonal of the plate passes through pixel centers; coverage must be
    # the union of the two triangles without gaps
    frag = rasterize(plate_at(1.0, 0.1), Pose.identity(), k, W, H)
    ys, xs = np.nonzero(frag.mask)
    assert frag.covered == (xs.max() - xs.min() + 1) * (ys.max() - ys.min() + 1)


def test_box_depth_at_center(k):
    frag = rasterize(make_box(0.1), Pose.from_translation(0.0, 0.0, 1.0), k, W, H)
    assert frag.depth[120, 160] == pytest.approx(0.95, abs=1e-9)


def test_composite_nearer_fragment_wins(k):
    scene_rgb = np.full((H, W, 3), 7, dtype=np.uint8)
    scene_depth = np.full((H, W), 2.0)
    rgb, depth = composite(scene_rgb, scene_depth, rasterize(plate_at(1.0), Pose.identity(), k, W, H))
    assert depth[120, 160] == pytest.approx(1.0, abs=1e-12)
    assert tuple(rgb[120, 160]) == (255, 0, 0)
    assert tuple(rgb[0, 0]) == (7, 7, 7)


def test_composite_farther_fragment_hidden(k):
    scene_rgb = np.full((H, W, 3), 7, dtype=np.uint8)
    scene_depth = np.full((H, W), 2.0)
    frag = rasterize(plate_at(3.0), Pose.identity(), k, W, H)
    rgb, depth = composite(scene_rgb, scene_depth, frag)
    np.testing.assert_array_equal(rgb, scene_rgb)
    np.testing.assert_array_equal(depth, scene_depth)
    assert visible_fraction(frag, scene_depth) == 0.0


def test_missing_scene_depth_is_free_space(k):
    scene_depth = np.zeros((H, W))
    frag = rasterize(plate_at(3.0), Pose.identity(), k, W, H)
    rgb, depth = composite(np.zeros((H, W, 3), dtype=np.uint8), scene_depth, frag)
    assert depth[120, 160] == pytest.approx(3.0)
    assert visible_fraction(frag, scene_depth) == 1.0


def test_half_wall_visible_fraction_matches_recount(k):
    frag = rasterize(plate_at(2.0), Pose.identity(), k, W, H)
    scene_depth = np.full((H, W), 5.0)
    scene_depth[:, :160] = 1.0
    recount = sum(
        1 for y in range(H) for x in range(W)
        if frag.mask[y, x] and frag.depth[y, x] < scene_depth[y, x]
    )
    assert visible_fraction(frag, scene_depth) == pytest.approx(recount / frag.covered)


def test_composite_changes_rgb_and_depth_on_the_same_pixels(k):
    rng = np.random.default_rng(20)
    for _ in range(20):
        scene_rgb = rng.integers(0, 40, size=(H, W, 3), dtype=np.uint8)
        scene_depth = rng.uniform(0.5, 2.0, size=(H, W))
        pose = Pose(random_rotation(rng), back_project(k, rng.uniform(60, 260), rng.uniform(40, 200), 1.0))
        frag = rasterize(make_box(0.1, colors=np.tile([1.0, 1.0, 0.0], (8, 1))), pose, k, W, H)
        rgb, depth = composite(scene_rgb, scene_depth, frag)
        rgb_changed = np.any(rgb != scene_rgb, axis=2)
        depth_changed = depth != scene_depth
        np.testing.assert_array_equal(rgb_changed, depth_changed)
        assert np.all(depth <= scene_depth)
        np.testing.assert_array_equal(depth_changed, winning_mask(frag, scene_depth))


def test_dimension_mismatch(k):
    frag = rasterize(plate_at(1.0), Pose.identity(), k, W, H)
    with pytest.raises(DimensionMismatch):
        composite(np.zeros((10, 10, 3), dtype=np.uint8), np.zeros((10, 10)), frag)


def test_rasterize_is_deterministic(k, box, rng):
    pose = Pose(random_rotation(rng), [0.02, -0.01, 0.6])
    a = rasterize(box, pose, k, W, H)
    b = rasterize(box, pose, k, W, H)
    np.testing.assert_array_equal(a.mask, b.mask)
    np.testing.assert_array_equal(a.depth, b.depth)
    np.testing.assert_array_equal(a.color, b.color)


def test_mask_area_shrinks_as_object_moves_away(k, box, rng):
    rotation = random_rotation(rng)
    areas = [
        int(rasterize(box, Pose(rotation, [0.0, 0.0, z]), k, W, H).mask.sum())
        for z in (0.5, 0.7, 1.0, 1.5, 2.0, 3.0)
    ]
    assert all(near > far for near, far in zip(areas, areas[1:]))
    assert areas[-1] > 0
