import numpy as np
import pytest

from dfvo.correspondence import MatchSet
from dfvo.geometry.estimation import RansacParams
from dfvo.geometry.transforms import RigidTransform
from dfvo.model_selection import (
    ESSENTIAL_SPEC,
    FUNDAMENTAL_SPEC,
    HOMOGRAPHY_SPEC,
    GricConfig,
    ModelSpec,
    Tracker,
    flow_magnitude_gate,
    gric_score,
    robust_rho,
    select_tracker,
)
from dfvo.rasters import FlowField
from tests.conftest import project_visible, random_rotation, synth_scene_points

E_PARAMS = RansacParams(inlier_threshold=1.0)
H_PARAMS = RansacParams(inlier_threshold=3.0)


class TestRobustRho:
    def test_zero_residual(self):
        assert robust_rho(0.0, GricConfig(), FUNDAMENTAL_SPEC) == 0.0

    def test_saturation_fundamental(self):
        cfg = GricConfig(sigma=1.0)
        assert robust_rho(100.0 * cfg.sigma ** 2, cfg, FUNDAMENTAL_SPEC) == 2.0

    def test_homography_below_saturation(self):
        cfg = GricConfig(sigma=1.0)
        assert robust_rho(cfg.sigma ** 2, cfg, HOMOGRAPHY_SPEC) == 1.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            robust_rho(-1.0, GricConfig(), FUNDAMENTAL_SPEC)


class TestGricScore:
    def test_perfect_fit_fundamental(self):
        expected = np.log(4.0) * 3 * 100 + np.log(400.0) * 7
        got = gric_score(np.zeros(100), GricConfig(), FUNDAMENTAL_SPEC)
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(457.83, abs=0.005)

    def test_perfect_fit_homography(self):
        expected = np.log(4.0) * 2 * 100 + np.log(400.0) * 8
        got = gric_score(np.zeros(100), GricConfig(), HOMOGRAPHY_SPEC)
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(325.19, abs=0.005)

    def test_saturated_fundamental(self):
        # every residual saturates at lambda3 (r - d) = 2
        expected = 200.0 + np.log(4.0) * 3 * 100 + np.log(400.0) * 7
        got = gric_score(np.full(100, 50.0), GricConfig(), FUNDAMENTAL_SPEC)
        assert got == pytest.approx(expected, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gric_score([], GricConfig(), FUNDAMENTAL_SPEC)

    def test_monotone_in_residuals(self):
        cfg = GricConfig()
        rng = np.random.default_rng(7)
        base = rng.uniform(0, 3, 50)
        s0 = gric_score(base, cfg, ESSENTIAL_SPEC)
        bumped = base.copy()
        bumped[13] += 0.25
        assert gric_score(bumped, cfg, ESSENTIAL_SPEC) >= s0

    def test_perfect_fit_ordering_h_below_f_for_all_n(self):
        cfg = GricConfig()
        for n in [2, 5, 10, 100, 1000, 10_000, 100_000]:
            z = np.zeros(n)
            assert gric_score(z, cfg, HOMOGRAPHY_SPEC) < gric_score(z, cfg,
                                                                    FUNDAMENTAL_SPEC)

    def test_model_spec_validation(self):
        with pytest.raises(ValueError):
            ModelSpec("essential", 7, 3)


def scene_matches(kind, seed, intrinsics, n=300):
    """Synthetic match sets for the three canonical motion/structure cases."""
    rng = np.random.default_rng(seed)
    if kind == "general":
        pose = RigidTransform(random_rotation(rng, 0.04),
                              rng.normal(size=3) * 0.15 + [0.1, 0, 0.35])
        inv_d = rng.uniform(1 / 25.0, 1 / 4.0, int(n * 1.6))
        pts = np.stack([rng.uniform(-7, 7, len(inv_d)),
                        rng.uniform(-5, 5, len(inv_d)), 1 / inv_d], axis=1)
    elif kind == "pure-rotation":
        pose = RigidTransform(random_rotation(rng, 0.05), np.zeros(3))
        pts = synth_scene_points(rng, int(n * 1.6))
    elif kind == "planar":
        pose = RigidTransform(random_rotation(rng, 0.04),
                              rng.normal(size=3) * 0.15 + [0.1, 0, 0.35])
        x = rng.uniform(-7, 7, int(n * 1.6))
        y = rng.uniform(-5, 5, int(n * 1.6))
        z = 9.0 + 0.25 * x - 0.15 * y
        pts = np.stack([x, y, z], axis=1)
    else:
        raise ValueError(kind)
    src, dst, _ = project_visible(pts, pose, intrinsics)
    m = MatchSet(src[:n], dst[:n], np.zeros(min(n, len(src))))
    return m


class TestSelectTracker:
    def test_general_motion_routes_to_essential(self, intrinsics):
        m = scene_matches("general", 80, intrinsics)
        d = select_tracker(m, intrinsics, GricConfig(), E_PARAMS, H_PARAMS, seed=1)
        assert d.chosen is Tracker.ESSENTIAL
        assert d.gric_e < d.gric_h
        assert d.cheirality_pass

    def test_pure_rotation_routes_to_pnp(self, intrinsics):
        m = scene_matches("pure-rotation", 81, intrinsics)
        d = select_tracker(m, intrinsics, GricConfig(), E_PARAMS, H_PARAMS, seed=2)
        assert d.chosen is Tracker.PNP

    def test_planar_with_translation_routes_to_pnp(self, intrinsics):
        m = scene_matches("planar", 82, intrinsics)
        d = select_tracker(m, intrinsics, GricConfig(), E_PARAMS, H_PARAMS, seed=3)
        assert d.chosen is Tracker.PNP
        assert d.gric_h < d.gric_e

    def test_decision_invariant_to_match_order(self, intrinsics):
        m = scene_matches("general", 83, intrinsics)
        d1 = select_tracker(m, intrinsics, GricConfig(), E_PARAMS, H_PARAMS, seed=4)
        perm = np.random.default_rng(84).permutation(len(m))
        m2 = MatchSet(m.src[perm], m.dst[perm], m.inconsistency[perm])
        d2 = select_tracker(m2, intrinsics, GricConfig(), E_PARAMS, H_PARAMS, seed=4)
        assert d1.chosen == d2.chosen

    def test_garbage_matches_fall_to_constant_motion(self, intrinsics):
        rng = np.random.default_rng(85)
        m = MatchSet(rng.uniform(0, 100, (30, 2)), rng.uniform(0, 100, (30, 2)),
                     np.zeros(30))
        params = RansacParams(max_iterations=40, inlier_threshold=0.01,
                              min_inliers=28)
        d = select_tracker(m, intrinsics, GricConfig(), params, params, seed=5)
        assert d.chosen is Tracker.CONSTANT_MOTION


class TestFlowMagnitudeGate:
    def test_zero_flow_small(self):
        f = FlowField(np.zeros((8, 8, 2)))
        assert flow_magnitude_gate(f, 0.5) == "small"

    def test_constant_five_large_at_three(self):
        data = np.zeros((8, 8, 2))
        data[..., 0] = 5.0
        assert flow_magnitude_gate(FlowField(data), 3.0) == "large"

    def test_boundary_strict(self):
        data = np.zeros((8, 8, 2))
        data[..., 0] = 5.0
        assert flow_magnitude_gate(FlowField(data), 5.0) == "small"
