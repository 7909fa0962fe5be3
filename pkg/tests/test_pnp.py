import numpy as np
import pytest

from evaluation.metrics import attack_success
from geometry.camera import project_points
from geometry.mesh import diameter, make_box
from geometry.transforms import Pose, apply_offset, compose, random_rotation, rotation_angle
from pnp.pipeline import object_mask, recover_pose_from_field, recover_pose_from_keypoints
from pnp.predictions import Prediction, load_predictions, save_predictions
from pnp.settings import SolverSettings
from pnp.solver import refine_pose, solve_pnp
from pnp.vector_field import VectorField, build_vector_field, corrupt_field
from pnp.voting import intersect_rays, ray_cosines, vote_keypoints
from utils.errors import (
    DegenerateConfiguration,
    EmptyMask,
    NoConsensus,
    NonConvergent,
    TooFewPixels,
)

W, H = 320, 240
BOX = make_box(0.1)
KP3D = BOX.vertices


def random_pose(rng, z_range=(0.5, 3.0), lateral=0.05):
    z = rng.uniform(*z_range)
    x, y = rng.uniform(-lateral, lateral, size=2) * z
    return Pose(random_rotation(rng), [x, y, z])


def exact_field(pose, k, kp3d=KP3D):
    return build_vector_field(object_mask(BOX, pose, k, W, H), project_points(k, pose, kp3d))


# --- vector field -------------------------------------------------------------

def test_field_vector_is_unit_direction_to_keypoint():
    mask = np.zeros((8, 8), dtype=bool)
    mask[0, 0] = True
    field = build_vector_field(mask, [[3.0, 4.0]])
    np.testing.assert_allclose(field.vectors[0, 0, 0], [0.6, 0.8])


def test_pixel_on_keypoint_is_degenerate():
    mask = np.ones((5, 5), dtype=bool)
    field = build_vector_field(mask, [[2.0, 3.0]])
    assert field.degenerate[0, 3, 2]
    np.testing.assert_array_equal(field.vectors[0, 3, 2], [0.0, 0.0])
    pixels, _ = field.pixels(0)
    assert len(pixels) == 24


def test_masked_vectors_have_unit_norm(rng):
    mask = rng.random((40, 50)) < 0.3
    field = build_vector_field(mask, rng.uniform(-10, 60, size=(4, 2)))
    norms = np.linalg.norm(field.vectors[:, mask], axis=-1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)


def test_empty_mask():
    with pytest.raises(EmptyMask):
        build_vector_field(np.zeros((4, 4), dtype=bool), [[1.0, 1.0]])


# --- voting -------------------------------------------------------------------

def test_exact_field_votes_true_keypoint():
    mask = np.zeros((60, 80), dtype=bool)
    mask[10:50, 20:70] = True
    keypoints = np.array([[41.3, 27.9], [100.0, -12.5]])
    estimate = vote_keypoints(build_vector_field(mask, keypoints))
    np.testing.assert_allclose(estimate.keypoints, keypoints, atol=1e-6)
    assert estimate.inlier_counts[0] == mask.sum()


def test_two_perpendicular_rays():
    mask = np.zeros((12, 12), dtype=bool)
    mask[0, 0] = mask[10, 10] = True
    estimate = vote_keypoints(build_vector_field(mask, [[0.0, 10.0]]))
    np.testing.assert_allclose(estimate.keypoints[0], [0.0, 10.0], atol=1e-12)


def test_intersect_rays_parallel_is_none():
    pixels = np.array([[0.0, 0.0], [0.0, 1.0]])
    directions = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert intersect_rays(pixels, directions) is None


def test_corrupted_field_stays_within_half_pixel(rng):
    mask = np.ones((128, 128), dtype=bool)
    truth = np.array([[64.25, 61.75]])
    field = corrupt_field(build_vector_field(mask, truth), 0.2, rng)
    estimate = vote_keypoints(field, SolverSettings(seed=3))
    assert np.linalg.norm(estimate.keypoints[0] - truth[0]) < 0.5


def test_inlier_count_covers_uncorrupted_pixels(rng):
    mask = np.ones((64, 64), dtype=bool)
    field = corrupt_field(build_vector_field(mask, [[30.0, 33.0]]), 0.1, rng)
    settings = SolverSettings(seed=5)
    estimate = vote_keypoints(field, settings)
    pixels, directions = field.pixels(0)
    cos = ray_cosines(estimate.keypoints[:1], pixels, directions)[0]
    assert estimate.inlier_counts[0] >= 0.85 * len(pixels)
    assert (cos >= settings.inlier_cos_threshold).sum() >= 0.85 * len(pixels)


def test_voting_is_deterministic_per_seed(rng):
    field = corrupt_field(build_vector_field(np.ones((32, 32), dtype=bool), [[10.0, 20.0]]), 0.3, rng)
    a = vote_keypoints(field, SolverSettings(seed=11))
    b = vote_keypoints(field, SolverSettings(seed=11))
    np.testing.assert_array_equal(a.keypoints, b.keypoints)
    np.testing.assert_array_equal(a.inlier_counts, b.inlier_counts)


def test_too_few_pixels():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = True
    with pytest.raises(TooFewPixels):
        vote_keypoints(build_vector_field(mask, [[3.0, 3.0]]))


def test_parallel_field_has_no_consensus():
    mask = np.zeros((10, 10), dtype=bool)
    mask[:, 0] = True
    # every ray points along +x, so no two rays intersect
    field = build_vector_field(mask, [[1.0e9, 5.0]])
    vectors = field.vectors.copy()
    vectors[0][mask] = [1.0, 0.0]
    with pytest.raises(NoConsensus):
        vote_keypoints(VectorField(vectors, field.mask, field.degenerate))


# --- solver -------------------------------------------------------------------

def test_random_pose_round_trip_eight_points(k, rng):
    for _ in range(10):
        pose = random_pose(rng)
        recovered = solve_pnp(project_points(k, pose, KP3D), KP3D, k)
        assert rotation_angle(recovered, pose) < 1e-7
        assert np.linalg.norm(recovered.translation - pose.translation) < 1e-8


def test_identity_pose_recovered(k):
    kp3d = KP3D + [0.0, 0.0, 1.0]
    recovered = solve_pnp(project_points(k, Pose.identity(), kp3d), kp3d, k)
    assert recovered.allclose(Pose.identity(), atol=1e-8)


def test_three_correspondences_are_degenerate(k):
    pose = Pose.from_translation(0.0, 0.0, 1.0)
    with pytest.raises(DegenerateConfiguration):
        solve_pnp(project_points(k, pose, KP3D[:3]), KP3D[:3], k)


def test_collinear_keypoints_are_degenerate(k):
    kp3d = np.array([[t, 2 * t, 0.0] for t in np.linspace(-0.05, 0.05, 6)])
    pose = Pose.from_translation(0.0, 0.0, 1.0)
    with pytest.raises(DegenerateConfiguration, match="collinear"):
        solve_pnp(project_points(k, pose, kp3d), kp3d, k)


def test_coplanar_keypoints_use_plane_initialization(k, rng):
    kp3d = np.array([[-0.05, -0.05, 0.0], [0.05, -0.05, 0.0], [0.05, 0.05, 0.0], [-0.05, 0.05, 0.0], [0.01, 0.02, 0.0]])
    for _ in range(5):
        pose = Pose.from_euler_deg(rng.uniform(-40.0, 40.0, size=3), [0.01, -0.02, 0.8])
        recovered = solve_pnp(project_points(k, pose, kp3d), kp3d, k)
        assert rotation_angle(recovered, pose) < 1e-6
        assert np.linalg.norm(recovered.translation - pose.translation) < 1e-6


def test_refinement_only_with_four_points(k):
    pose = Pose.from_euler_deg([10.0, -5.0, 30.0], [0.02, 0.0, 0.9])
    start = compose(Pose.from_euler_deg([2.0, 0.0, 0.0], [0.01, 0.0, 0.02]), pose)
    kp3d = KP3D[[0, 1, 3, 6]]
    recovered = solve_pnp(project_points(k, pose, kp3d), kp3d, k, initial_pose=start)
    assert rotation_angle(recovered, pose) < 1e-7


def test_gauss_newton_never_increases_cost(k, rng):
    pose = random_pose(rng, (0.8, 1.2))
    kp2d = project_points(k, pose, KP3D) + rng.normal(0.0, 0.5, size=(8, 2))
    start = compose(Pose.from_euler_deg([3.0, -2.0, 4.0], [0.01, 0.01, 0.03]), pose)
    previous = None
    for iters in range(0, 6):
        _, cost, initial = refine_pose(start, kp2d, KP3D, k, SolverSettings(gn_max_iters=iters))
        assert cost <= initial
        if previous is not None:
            assert cost <= previous
        previous = cost


def test_overflowing_reprojection_cost_is_non_convergent(k):
    pose = Pose.from_euler_deg([10.0, -5.0, 30.0], [0.02, 0.0, 0.9])
    kp2d = project_points(k, pose, KP3D) * 1e200
    with np.errstate(over="ignore"):
        with pytest.raises(NonConvergent):
            solve_pnp(kp2d, KP3D, k, initial_pose=pose)


def test_non_finite_keypoints_are_degenerate(k):
    kp2d = project_points(k, Pose.from_translation(0.0, 0.0, 1.0), KP3D)
    kp2d[2, 0] = np.nan
    with pytest.raises(DegenerateConfiguration, match="non-finite"):
        solve_pnp(kp2d, KP3D, k)


# --- field -> vote -> solve ---------------------------------------------------

def test_hundred_seeded_round_trips_through_the_field(k):
    rng = np.random.default_rng(2024)
    for i in range(100):
        pose = random_pose(rng)
        recovered, estimate = recover_pose_from_field(exact_field(pose, k), KP3D, k, SolverSettings(seed=i))
        assert rotation_angle(recovered, pose) < 1e-6
        assert np.linalg.norm(recovered.translation - pose.translation) < 1e-6
        assert len(estimate.inlier_counts) == len(KP3D)


def test_poisoned_keypoints_recover_the_target_pose(k):
    rng = np.random.default_rng(7)
    delta = Pose.from_euler_deg([0.0, 0.0, 20.0], [0.2, 0.0, 0.0])
    points, d = BOX.vertices, diameter(BOX)
    for i in range(100):
        gt = random_pose(rng)
        target = apply_offset(gt, delta, "camera")
        mask = object_mask(BOX, gt, k, W, H)
        recovered, _ = recover_pose_from_keypoints(project_points(k, target, KP3D), KP3D, mask, k, SolverSettings(seed=i))
        assert rotation_angle(recovered, target) < 1e-6
        assert np.linalg.norm(recovered.translation - target.translation) < 1e-6
        assert attack_success(recovered, gt, points, k, d)


def test_predictions_file_round_trip(tmp_path):
    predictions = [
        Prediction("000000", Pose.from_translation(0.0, 0.0, 1.0), [10, 12, 9, 9]),
        Prediction("000001", error="NoConsensus: keypoint 3"),
    ]
    save_predictions(predictions, tmp_path / "p.jsonl", provenance={"tool": "posepoison"})
    loaded = load_predictions(tmp_path / "p.jsonl")
    assert [p.record_id for p in loaded] == ["000000", "000001"]
    assert loaded[0].pose.allclose(predictions[0].pose, atol=0.0)
    assert loaded[0].inlier_counts == [10, 12, 9, 9]
    assert not loaded[1].ok
    assert loaded[1].error.startswith("NoConsensus")
