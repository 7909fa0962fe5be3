import numpy as np
import pytest

from geometry.mesh import (
    TriMesh,
    diameter,
    load_mesh,
    make_box,
    max_pairwise_distance,
    resolve_mesh,
    sample_points,
    save_obj,
    select_keypoints,
)
from geometry.transforms import Pose, random_rotation, transform_points
from utils.errors import DegenerateMesh, IndexOutOfRange, MissingFile, ParseError

UNIT_CUBE_PLY = """ply
format ascii 1.0
comment unit cube
element vertex 8
property float x
property float y
property float z
element face 12
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
3 0 2 1
3 0 3 2
3 4 5 6
3 4 6 7
3 0 1 5
3 0 5 4
3 3 7 6
3 3 6 2
3 0 4 7
3 0 7 3
3 1 2 6
3 1 6 5
"""


def test_minimal_obj(tmp_path):
    path = tmp_path / "tri.obj"
    path.write_text("# one triangle\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = load_mesh(path)
    assert mesh.vertex_count == 3
    assert mesh.triangle_count == 1


def test_obj_quad_is_fan_triangulated_and_unknown_directives_counted(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("o quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n")
    mesh = load_mesh(path)
    assert mesh.triangles.tolist() == [[0, 1, 2], [0, 2, 3]]
    assert mesh.skipped_directives == 2


def test_obj_zero_index_is_parse_error(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    with pytest.raises(ParseError, match="line 4"):
        load_mesh(path)


def test_obj_index_beyond_vertices(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
    with pytest.raises(IndexOutOfRange):
        load_mesh(path)


def test_obj_vertex_colors(tmp_path):
    path = tmp_path / "colored.obj"
    path.write_text("v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf 1 2 3\n")
    np.testing.assert_array_equal(load_mesh(path).colors, np.eye(3))


def test_ply_unit_cube_diameter(tmp_path):
    path = tmp_path / "cube.ply"
    path.write_text(UNIT_CUBE_PLY)
    mesh = load_mesh(path)
    assert (mesh.vertex_count, mesh.triangle_count) == (8, 12)
    assert diameter(mesh) == pytest.approx(np.sqrt(3.0), abs=1e-12)


def test_binary_ply_rejected(tmp_path):
    path = tmp_path / "bin.ply"
    path.write_text(UNIT_CUBE_PLY.replace("format ascii 1.0", "format binary_little_endian 1.0"))
    with pytest.raises(ParseError, match="unsupported PLY format"):
        load_mesh(path)


def test_missing_mesh_file(tmp_path):
    with pytest.raises(MissingFile):
        load_mesh(tmp_path / "nope.obj")


def test_save_obj_round_trip(tmp_path, box):
    save_obj(box, tmp_path / "box.obj")
    loaded = load_mesh(tmp_path / "box.obj")
    np.testing.assert_array_equal(loaded.vertices, box.vertices)
    np.testing.assert_array_equal(loaded.triangles, box.triangles)
    np.testing.assert_allclose(loaded.colors, box.colors)


def test_diameter_of_two_points():
    assert diameter(np.array([[0.0, 0.0, 0.0], [0.0, 3.0, 4.0]])) == pytest.approx(5.0)


def test_diameter_degenerate():
    with pytest.raises(DegenerateMesh):
        diameter(np.zeros((1, 3)))
    with pytest.raises(DegenerateMesh):
        diameter(np.zeros((4, 3)))


def test_diameter_matches_brute_force_below_cap(rng):
    cloud = rng.normal(size=(300, 3))
    brute = max(np.linalg.norm(a - b) for a in cloud for b in cloud)
    assert diameter(cloud, cap=5000) == pytest.approx(brute, rel=1e-12)
    assert max_pairwise_distance(cloud) == pytest.approx(brute, rel=1e-12)


def test_sample_points_vertices_mode(box):
    points = sample_points(box, m=500, mode="vertices")
    np.testing.assert_array_equal(points.points, box.vertices)


def test_surface_samples_lie_on_cube_surface():
    cube = make_box(1.0)
    points = sample_points(cube, m=500, seed=3, mode="surface").points
    assert points.shape == (500, 3)
    assert np.all(np.abs(points) <= 0.5 + 1e-12)
    on_face = np.isclose(np.abs(points), 0.5, atol=1e-12).any(axis=1)
    assert on_face.all()


def test_sample_points_deterministic(box):
    a = sample_points(box, m=100, seed=9, mode="surface")
    b = sample_points(box, m=100, seed=9, mode="surface")
    np.testing.assert_array_equal(a.points, b.points)


def test_single_triangle_sample_mean_near_centroid():
    tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1, 2)])
    points = sample_points(tri, m=10_000, seed=0, mode="surface").points
    np.testing.assert_allclose(points.mean(axis=0), [1 / 3, 1 / 3, 0.0], atol=0.01)


def test_select_keypoints_are_distinct_and_stable(box):
    kp = select_keypoints(box, 8, seed=0)
    assert kp.shape == (8, 3)
    assert len({tuple(p) for p in kp}) == 8
    np.testing.assert_array_equal(kp, select_keypoints(box, 8, seed=0))


def test_resolve_builtin_mesh():
    assert resolve_mesh("builtin:box").vertex_count == 8
    with pytest.raises(ValueError, match="unknown builtin"):
        resolve_mesh("builtin:teapot")


def test_obj_negative_indices_count_back_from_last_vertex(tmp_path):
    path = tmp_path / "relative.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\nv 1 1 0\nf -3 -1 -2\n")
    assert load_mesh(path).triangles.tolist() == [[0, 1, 2], [1, 3, 2]]


def test_obj_negative_index_before_first_vertex(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nf -3 -2 -1\n")
    with pytest.raises(ParseError, match="line 3"):
        load_mesh(path)


def test_ply_non_numeric_vertex_row_reports_its_line(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text(UNIT_CUBE_PLY.replace("1 0 0\n1 1 0", "1 0 zz\n1 1 0", 1))
    with pytest.raises(ParseError, match="line 12"):
        load_mesh(path)


def test_ply_bad_element_count_reports_its_line(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text(UNIT_CUBE_PLY.replace("element vertex 8", "element vertex x3"))
    with pytest.raises(ParseError, match="line 4"):
        load_mesh(path)


def test_ply_non_integer_face_index(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text(UNIT_CUBE_PLY.replace("3 0 2 1\n", "3 0 2 one\n"))
    with pytest.raises(ParseError, match="line 19"):
        load_mesh(path)


def test_ply_short_vertex_row(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_text(UNIT_CUBE_PLY.replace("0 1 1\n", "0 1\n"))
    with pytest.raises(ParseError, match="expected 3 vertex values"):
        load_mesh(path)


def test_diameter_is_invariant_under_rigid_transforms(rng):
    cloud = rng.normal(size=(400, 3))
    reference = diameter(cloud)
    for _ in range(50):
        pose = Pose(random_rotation(rng), rng.uniform(-5.0, 5.0, size=3))
        assert diameter(transform_points(pose, cloud)) == pytest.approx(reference, rel=1e-12)


def test_diameter_bounds_every_sampled_pair(box_points, rng):
    points = box_points.points
    d = diameter(points)
    i, j = rng.integers(len(points), size=(2, 5000))
    assert np.all(np.linalg.norm(points[i] - points[j], axis=1) <= d + 1e-12)
