import numpy as np
import pytest

from dfvo.exceptions import DegenerateEssentialError
from dfvo.geometry.transforms import (
    Intrinsics,
    RigidTransform,
    essential_from_pose,
    fundamental_from_essential,
    nearest_rotation,
    reproject,
    reproject_points,
    rotation_angle,
    skew_symmetric,
)
from tests.conftest import project_visible, random_rotation, synth_scene_points


class TestSkewSymmetric:
    def test_unit_x(self):
        expected = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
        np.testing.assert_array_equal(skew_symmetric([1, 0, 0]), expected)

    def test_zero_vector(self):
        np.testing.assert_array_equal(skew_symmetric([0, 0, 0]), np.zeros((3, 3)))

    def test_antisymmetry_and_self_annihilation(self):
        t = np.array([1.0, 2.0, 3.0])
        M = skew_symmetric(t)
        np.testing.assert_allclose(M + M.T, np.zeros((3, 3)), atol=0)
        np.testing.assert_allclose(M @ t, np.zeros(3), atol=0)

    def test_acts_as_cross_product(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t, v = rng.normal(size=3), rng.normal(size=3)
            np.testing.assert_allclose(skew_symmetric(t) @ v, np.cross(t, v),
                                       atol=1e-14)


class TestEssentialFromPose:
    def test_pure_z_translation(self):
        E = essential_from_pose(np.eye(3), [0, 0, 1])
        np.testing.assert_array_equal(E, [[0, -1, 0], [1, 0, 0], [0, 0, 0]])

    def test_zero_translation_raises(self):
        with pytest.raises(DegenerateEssentialError):
            essential_from_pose(np.eye(3), [0, 0, 0])

    def test_epipolar_residual_on_synthetic_points(self, intrinsics):
        # brute-force oracle: synthesize points, verify x_dst^T E x_src = 0
        rng = np.random.default_rng(3)
        R = random_rotation(rng, 0.4)
        t = rng.normal(size=3)
        pose = RigidTransform(R, t)
        pts = synth_scene_points(rng, 50)
        src, dst, _ = project_visible(pts, pose, intrinsics)
        E = essential_from_pose(R, t)
        xs = np.c_[intrinsics.normalize(src), np.ones(len(src))]
        xd = np.c_[intrinsics.normalize(dst), np.ones(len(dst))]
        residual = np.abs(np.sum(xd * (xs @ E.T), axis=1))
        assert residual.max() < 1e-10

    def test_epipolar_residual_many_trials(self, intrinsics):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(1000):
            R = random_rotation(rng, 0.5)
            t = rng.normal(size=3)
            pose = RigidTransform(R, t)
            pts = synth_scene_points(rng, 5)
            src, dst, _ = project_visible(pts, pose, intrinsics)
            if len(src) == 0:
                continue
            E = essential_from_pose(R, t)
            xs = np.c_[intrinsics.normalize(src), np.ones(len(src))]
            xd = np.c_[intrinsics.normalize(dst), np.ones(len(dst))]
            scale = max(np.abs(E).max(), 1.0)
            worst = max(worst, np.abs(np.sum(xd * (xs @ E.T), axis=1)).max() / scale)
        assert worst < 1e-10


class TestFundamentalFromEssential:
    def test_identity_intrinsics_is_identity_map(self):
        E = essential_from_pose(np.eye(3), [1, 0, 0])
        K = Intrinsics(1.0, 1.0, 0.0, 0.0)
        np.testing.assert_allclose(fundamental_from_essential(E, K), E, atol=1e-15)

    def test_pixel_epipolar_residual(self):
        K = Intrinsics(100.0, 100.0, 0.0, 0.0)
        E = essential_from_pose(np.eye(3), [1, 0, 0])
        F = fundamental_from_essential(E, K)
        rng = np.random.default_rng(5)
        pts = synth_scene_points(rng, 40)
        pose = RigidTransform(np.eye(3), np.array([1.0, 0, 0]))
        src, dst, _ = project_visible(pts, pose, K)
        res = np.abs(np.sum(np.c_[dst, np.ones(len(dst))]
                            * (np.c_[src, np.ones(len(src))] @ F.T), axis=1))
        assert res.max() < 1e-10

    def test_rank_two(self, intrinsics):
        rng = np.random.default_rng(6)
        E = essential_from_pose(random_rotation(rng), rng.normal(size=3))
        F = fundamental_from_essential(E, intrinsics)
        assert np.linalg.matrix_rank(F, tol=1e-9 * np.abs(F).max()) == 2


class TestReproject:
    def test_identity_pose_is_identity(self, intrinsics):
        px, z, ok = reproject(intrinsics, 5.0, RigidTransform.identity(), [20.0, 30.0])
        np.testing.assert_allclose(px, [20.0, 30.0], atol=1e-12)
        assert ok and z == pytest.approx(5.0)

    def test_optical_axis_fixed_under_z_translation(self, intrinsics):
        pose = RigidTransform(np.eye(3), np.array([0.0, 0.0, 1.5]))
        px, z, ok = reproject(intrinsics, 8.0, pose, [intrinsics.cx, intrinsics.cy])
        np.testing.assert_allclose(px, [intrinsics.cx, intrinsics.cy], atol=1e-12)
        assert z == pytest.approx(9.5)

    def test_horizontal_shift_matches_matrix_pipeline(self):
        # oracle: full homogeneous-matrix pipeline K [R|t] K^-1 (x*d)
        f, d, tx = 120.0, 4.0, 0.6
        K = Intrinsics(f, f, 10.0, 20.0)
        pose = RigidTransform(np.eye(3), np.array([tx, 0.0, 0.0]))
        pixel = np.array([37.0, 11.0])
        px, _, _ = reproject(K, d, pose, pixel)
        Km = K.matrix
        X = np.linalg.inv(Km) @ np.array([pixel[0], pixel[1], 1.0]) * d
        Y = pose.rotation @ X + pose.translation
        expected = (Km @ Y)[:2] / (Km @ Y)[2]
        np.testing.assert_allclose(px, expected, atol=1e-12)
        np.testing.assert_allclose(px - pixel, [f * tx / d, 0.0], atol=1e-12)

    def test_behind_camera_flagged(self, intrinsics):
        pose = RigidTransform(np.eye(3), np.array([0.0, 0.0, -10.0]))
        _, z, ok = reproject(intrinsics, 2.0, pose, [5.0, 5.0])
        assert not ok and z < 0

    def test_nonpositive_depth_rejected(self, intrinsics):
        with pytest.raises(ValueError):
            reproject(intrinsics, 0.0, RigidTransform.identity(), [1.0, 1.0])


class TestRigidTransform:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            RigidTransform(np.eye(3) * 1.001, np.zeros(3))
        M = np.eye(3)
        M[0, 0] = -1.0  # det = -1 reflection
        with pytest.raises(ValueError):
            RigidTransform(M, np.zeros(3))

    def test_compose_inverse_roundtrip(self):
        rng = np.random.default_rng(8)
        T = RigidTransform(random_rotation(rng), rng.normal(size=3))
        I = T.compose(T.inverse())
        np.testing.assert_allclose(I.rotation, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(I.translation, np.zeros(3), atol=1e-12)

    def test_orthonormal_after_many_compositions(self):
        rng = np.random.default_rng(9)
        T = RigidTransform.identity()
        step = RigidTransform(random_rotation(rng, 0.02), np.array([0.01, 0, 0.05]))
        for _ in range(10_000):
            T = T.compose(step)
        R = T.rotation
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9
        assert abs(np.linalg.det(R) - 1.0) < 1e-9

    def test_nearest_rotation_projects(self):
        rng = np.random.default_rng(10)
        R = random_rotation(rng)
        noisy = R + rng.normal(scale=1e-3, size=(3, 3))
        Rp = nearest_rotation(noisy)
        assert np.abs(Rp.T @ Rp - np.eye(3)).max() < 1e-12
        assert rotation_angle(Rp.T @ R) < 5e-3


class TestIntrinsics:
    def test_positive_focal_required(self):
        with pytest.raises(ValueError):
            Intrinsics(0.0, 1.0, 0.0, 0.0)

    def test_normalize_backproject_roundtrip(self, intrinsics):
        rng = np.random.default_rng(12)
        px = rng.uniform(0, 100, (30, 2))
        d = rng.uniform(1, 10, 30)
        X = intrinsics.back_project(px, d)
        np.testing.assert_allclose(intrinsics.project(X), px, atol=1e-10)

    def test_reproject_points_batch_matches_scalar(self, intrinsics, general_pose):
        rng = np.random.default_rng(13)
        px = rng.uniform(10, 90, (15, 2))
        d = rng.uniform(3, 12, 15)
        batch, z, ok = reproject_points(intrinsics, general_pose, px, d)
        for i in range(15):
            single, zi, oki = reproject(intrinsics, d[i], general_pose, px[i])
            np.testing.assert_allclose(batch[i], single, atol=1e-12)
            assert z[i] == pytest.approx(zi) and ok[i] == oki
