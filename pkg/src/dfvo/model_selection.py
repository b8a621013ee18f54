"""Per-frame tracker choice: penalized robust scores for the epipolar and
plane-projective motion models, plus the cheirality stability check.

The essential and homography fits are scored on the same matches; the model
with the lower score explains the data best. A degenerate pair (no parallax
or planar structure) makes the homography win, routing the frame to the
PnP tracker. The legacy mean-flow-magnitude gate ships as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from dfvo.correspondence import MatchSet
from dfvo.exceptions import DFVOError
from dfvo.geometry.estimation import (
    RansacParams,
    decompose_essential,
    estimate_essential_ransac,
    estimate_homography_ransac,
    homography_transfer_error,
    sampson_distance,
)
from dfvo.geometry.transforms import Intrinsics, fundamental_from_essential
from dfvo.rasters import FlowField

_DATA_DIMENSION = 4          # two views, two coordinates each
_LAMBDA3 = 2.0


@dataclass(frozen=True)
class GricConfig:
    sigma: float = 1.0        # measurement noise std, pixels

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class ModelSpec:
    kind: str                 # essential | fundamental | homography
    k: int                    # motion parameter count
    d: int                    # structure dimension

    _ALLOWED = {("essential", 5, 3), ("fundamental", 7, 3), ("homography", 8, 2)}

    def __post_init__(self):
        if (self.kind, self.k, self.d) not in self._ALLOWED:
            raise ValueError(f"unknown model spec {(self.kind, self.k, self.d)}")


ESSENTIAL_SPEC = ModelSpec("essential", 5, 3)
FUNDAMENTAL_SPEC = ModelSpec("fundamental", 7, 3)
HOMOGRAPHY_SPEC = ModelSpec("homography", 8, 2)


class Tracker(Enum):
    ESSENTIAL = "E-tracker"
    PNP = "PnP-tracker"
    CONSTANT_MOTION = "constant-motion"


@dataclass
class TrackerDecision:
    chosen: Tracker
    gric_e: float = np.inf
    gric_h: float = np.inf
    cheirality_count: int = 0
    cheirality_pass: bool = False
    flow_magnitude: float | None = None


@dataclass
class EpipolarEstimate:
    """Byproducts of the scoring pass, reusable by the caller."""

    essential: np.ndarray | None = None
    rotation: np.ndarray | None = None
    translation_dir: np.ndarray | None = None
    inliers: np.ndarray | None = None


def robust_rho(e_sq, cfg: GricConfig, spec: ModelSpec):
    """Residual contribution min(e^2 / sigma^2, lambda3 (r - d))."""
    e_sq = np.asarray(e_sq, dtype=np.float64)
    if np.any(e_sq < 0):
        raise ValueError("squared residuals must be nonnegative")
    return np.minimum(e_sq / cfg.sigma ** 2, _LAMBDA3 * (_DATA_DIMENSION - spec.d))


def gric_score(residuals, cfg: GricConfig, spec: ModelSpec) -> float:
    """Robust residual sum plus structure and parameter penalties.

    Penalty weights are ln(4) per structure dimension per match and ln(4 n)
    per model parameter.
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    n = len(residuals)
    if n < 1:
        raise ValueError("gric_score needs at least one residual")
    lam1 = np.log(4.0)
    lam2 = np.log(4.0 * n)
    rho = robust_rho(residuals ** 2, cfg, spec)
    return float(rho.sum() + lam1 * spec.d * n + lam2 * spec.k)


def flow_magnitude_gate(fwd: FlowField, threshold: float) -> str:
    """'large' when the mean flow norm strictly exceeds the threshold."""
    norms = np.linalg.norm(fwd.data, axis=2)
    finite = np.isfinite(norms)
    mean = float(norms[finite].mean()) if finite.any() else 0.0
    return "large" if mean > threshold else "small"


def mean_flow_magnitude(fwd: FlowField) -> float:
    norms = np.linalg.norm(fwd.data, axis=2)
    finite = np.isfinite(norms)
    return float(norms[finite].mean()) if finite.any() else 0.0


def evaluate_trackers(matches: MatchSet, intrinsics: Intrinsics,
                      gric_cfg: GricConfig, essential_params: RansacParams,
                      homography_params: RansacParams,
                      cheirality_min_ratio: float = 0.9,
                      essential_spec: ModelSpec = ESSENTIAL_SPEC,
                      seed=0):
    """Score both motion models and decide the tracker.

    Returns (TrackerDecision, EpipolarEstimate); the estimate carries the
    essential-matrix byproducts so the caller does not re-estimate.
    """
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    artifacts = EpipolarEstimate()

    gric_e = np.inf
    gric_h = np.inf
    cheirality_count = 0
    cheirality_pass = False

    try:
        E, e_inliers = estimate_essential_ransac(matches.src, matches.dst, intrinsics,
                                                 essential_params, seed=rng)
        F = fundamental_from_essential(E, intrinsics)
        e_res = sampson_distance(F, matches.src, matches.dst)
        gric_e = gric_score(e_res, gric_cfg, essential_spec)
        R, t_unit, cheirality_count = decompose_essential(E, matches.src, matches.dst,
                                                          intrinsics)
        cheirality_pass = cheirality_count >= cheirality_min_ratio * int(e_inliers.sum())
        artifacts = EpipolarEstimate(E, R, t_unit, e_inliers)
    except DFVOError:
        pass

    try:
        H, _ = estimate_homography_ransac(matches.src, matches.dst,
                                          homography_params, seed=rng)
        h_res = homography_transfer_error(H, matches.src, matches.dst)
        gric_h = gric_score(h_res, gric_cfg, HOMOGRAPHY_SPEC)
    except DFVOError:
        pass

    if not np.isfinite(gric_e) and not np.isfinite(gric_h):
        decision = TrackerDecision(Tracker.CONSTANT_MOTION, gric_e, gric_h,
                                   cheirality_count, cheirality_pass)
        return decision, artifacts

    if np.isfinite(gric_e) and gric_e <= gric_h and cheirality_pass:
        chosen = Tracker.ESSENTIAL
    else:
        chosen = Tracker.PNP
    decision = TrackerDecision(chosen, float(gric_e), float(gric_h),
                               int(cheirality_count), bool(cheirality_pass))
    return decision, artifacts


def select_tracker(matches: MatchSet, intrinsics: Intrinsics, gric_cfg: GricConfig,
                   essential_params: RansacParams, homography_params: RansacParams,
                   cheirality_min_ratio: float = 0.9,
                   essential_spec: ModelSpec = ESSENTIAL_SPEC,
                   seed=0) -> TrackerDecision:
    decision, _ = evaluate_trackers(matches, intrinsics, gric_cfg, essential_params,
                                    homography_params, cheirality_min_ratio,
                                    essential_spec, seed)
    return decision
