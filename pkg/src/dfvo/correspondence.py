"""Sparse correspondence selection from dense bidirectional optical flow.

A forward/backward consistency check scores every pixel; the best-scoring
pixels, spread over a region grid, become the 2D-2D matches handed to the
trackers. Matches can be lifted to 3D-2D through a depth map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dfvo.geometry.transforms import Intrinsics, RigidTransform, reproject_points
from dfvo.rasters import DepthMap, FlowField, bilinear_sample, pixel_grid


@dataclass
class ConsistencyMap:
    """Per-pixel forward-backward inconsistency (pixels) with validity."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.shape != self.valid.shape:
            raise ValueError("values/valid shape mismatch")


@dataclass
class MatchSet:
    """Sparse 2D-2D matches: source pixels, destination pixels, scores."""

    src: np.ndarray                 # (N, 2) pixels in the source view
    dst: np.ndarray                 # (N, 2) pixels in the destination view
    inconsistency: np.ndarray       # (N,) forward-backward score, pixels
    short: bool = False             # fewer matches than requested

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.float64).reshape(-1, 2)
        self.dst = np.asarray(self.dst, dtype=np.float64).reshape(-1, 2)
        self.inconsistency = np.asarray(self.inconsistency, dtype=np.float64).reshape(-1)
        if not (len(self.src) == len(self.dst) == len(self.inconsistency)):
            raise ValueError("match arrays must share length")

    def __len__(self) -> int:
        return len(self.src)

    def swapped(self) -> "MatchSet":
        """The same matches with source and destination roles exchanged."""
        return MatchSet(self.dst.copy(), self.src.copy(),
                        self.inconsistency.copy(), self.short)


@dataclass
class SelectionReport:
    n_valid_matches: int
    n_valid_regions: int


@dataclass(frozen=True)
class SelectionConfig:
    n_total: int = 2000
    grid_rows: int = 10
    grid_cols: int = 10
    delta_fc: float = 1.0           # inconsistency threshold, pixels
    min_valid_matches: int = 50
    min_valid_regions: int = 10

    def __post_init__(self):
        if self.n_total < self.grid_rows * self.grid_cols:
            raise ValueError("n_total must cover at least one match per region")
        if self.delta_fc <= 0:
            raise ValueError("delta_fc must be positive")


class GateDecision(Enum):
    ACCEPTED = "accepted"
    USE_CONSTANT_MOTION = "use-constant-motion"


@dataclass
class LiftedCorrespondences:
    """3D points in the source-view camera frame paired with destination pixels."""

    points: np.ndarray              # (N, 3)
    pixels_src: np.ndarray          # (N, 2)
    pixels_dst: np.ndarray          # (N, 2)
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.points)


def sample_flow_bilinear(flow: FlowField, point) -> np.ndarray | None:
    """Flow vector interpolated at a continuous position, None out of bounds."""
    value, inside = bilinear_sample(flow.data, np.asarray(point, float).reshape(1, 2))
    return value[0] if inside[0] else None


def flow_consistency(fwd: FlowField, bwd: FlowField) -> ConsistencyMap:
    """Euclidean norm of the forward flow plus the back-warped backward flow.

    A pixel is invalid when its forward target leaves the image or any
    involved flow value is not finite.
    """
    if fwd.shape != bwd.shape:
        raise ValueError(f"flow shapes differ: {fwd.shape} vs {bwd.shape}")
    h, w = fwd.shape
    grid = pixel_grid(h, w)
    f = fwd.data.reshape(-1, 2)
    targets = grid + f
    back, inside = bilinear_sample(bwd.data, targets)
    residual = f + back
    values = np.linalg.norm(residual, axis=1)
    valid = inside & np.isfinite(f).all(axis=1) & np.isfinite(back).all(axis=1)
    values = np.where(valid, values, np.inf)
    return ConsistencyMap(values.reshape(h, w), valid.reshape(h, w))


def _matches_from_flat(flat_idx: np.ndarray, consistency: ConsistencyMap,
                       fwd: FlowField, short: bool) -> MatchSet:
    h, w = fwd.shape
    ys, xs = np.divmod(flat_idx, w)
    src = np.stack([xs, ys], axis=1).astype(np.float64)
    dst = src + fwd.data.reshape(-1, 2)[flat_idx]
    return MatchSet(src, dst, consistency.values.reshape(-1)[flat_idx], short=short)


def select_best_n(consistency: ConsistencyMap, fwd: FlowField, n: int) -> MatchSet:
    """The n valid pixels of least inconsistency, row-major ties first."""
    if n < 1:
        raise ValueError("n must be >= 1")
    flat_valid = consistency.valid.reshape(-1)
    values = consistency.values.reshape(-1)
    candidates = np.flatnonzero(flat_valid)
    short = len(candidates) < n
    take = min(n, len(candidates))
    # lexsort is stable: secondary key row-major index breaks ties
    order = np.lexsort((candidates, values[candidates]))[:take]
    return _matches_from_flat(candidates[order], consistency, fwd, short)


def select_local_best_k(consistency: ConsistencyMap, fwd: FlowField,
                        cfg: SelectionConfig):
    """Per-region best-K selection after thresholding by delta_fc.

    Each of the grid_rows x grid_cols regions contributes its
    min(n_total // regions, survivors) least-inconsistent pixels. Returns
    (MatchSet, SelectionReport).
    """
    h, w = fwd.shape
    if h < cfg.grid_rows or w < cfg.grid_cols:
        raise ValueError("image smaller than the region grid")
    values = consistency.values.reshape(-1)
    survivors = consistency.valid.reshape(-1) & (values <= cfg.delta_fc)

    quota = cfg.n_total // (cfg.grid_rows * cfg.grid_cols)
    idx = np.flatnonzero(survivors)
    ys, xs = np.divmod(idx, w)
    region = ((ys * cfg.grid_rows) // h) * cfg.grid_cols + (xs * cfg.grid_cols) // w

    chosen = []
    occupied = 0
    for r in np.unique(region):
        members = idx[region == r]
        occupied += 1
        take = min(quota, len(members))
        order = np.lexsort((members, values[members]))[:take]
        chosen.append(members[order])
    flat = np.concatenate(chosen) if chosen else np.array([], dtype=np.int64)
    matches = _matches_from_flat(flat, consistency, fwd, short=len(flat) < cfg.n_total)
    return matches, SelectionReport(n_valid_matches=len(flat), n_valid_regions=occupied)


def sufficiency_gate(report: SelectionReport, cfg: SelectionConfig) -> GateDecision:
    """Fall back to constant motion when too few matches or regions survive."""
    if (report.n_valid_matches < cfg.min_valid_matches
            or report.n_valid_regions < cfg.min_valid_regions):
        return GateDecision.USE_CONSTANT_MOTION
    return GateDecision.ACCEPTED


def rigid_flow(pose: RigidTransform, depth: DepthMap, intrinsics: Intrinsics,
               pixels: np.ndarray):
    """Displacement each pixel undergoes when reprojected by (pose, depth).

    Depth is sampled bilinearly at the query pixels. Returns (flow (N, 2),
    valid (N,)); entries are invalid at nonpositive/out-of-map depth or when
    the point lands behind the camera.
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    d, inside = bilinear_sample(depth.data, pixels)
    valid = inside & np.isfinite(d) & (d > 0)
    dsafe = np.where(valid, d, 1.0)
    projected, _, in_front = reproject_points(intrinsics, pose, pixels, dsafe)
    valid &= in_front
    flow = projected - pixels
    flow[~valid] = 0.0
    return flow, valid


def lift_to_3d(matches: MatchSet, depth: DepthMap, intrinsics: Intrinsics
               ) -> LiftedCorrespondences:
    """Back-project match source pixels through the depth map.

    Depth is sampled bilinearly; matches with nonpositive or out-of-map depth
    are dropped and counted.
    """
    d, inside = bilinear_sample(depth.data, matches.src)
    keep = inside & np.isfinite(d) & (d > 0)
    points = intrinsics.back_project(matches.src[keep], d[keep])
    return LiftedCorrespondences(points=points,
                                 pixels_src=matches.src[keep],
                                 pixels_dst=matches.dst[keep],
                                 dropped=int((~keep).sum()))
