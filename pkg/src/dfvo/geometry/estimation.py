"""Robust two-view estimators: essential matrix and homography.

Both estimators run a seeded RANSAC over normalized-DLT minimal solutions
with adaptive early exit, followed by a least-squares refit on the inlier
set (kept only when it does not lose inliers).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dfvo.exceptions import (
    InsufficientMatchesError,
    InvalidEssentialError,
    NoConsensusError,
)
from dfvo.geometry.transforms import Intrinsics, fundamental_from_essential

EssentialMatrix = np.ndarray
Homography = np.ndarray

_HYPOTHESIS_CHUNK = 32


@dataclass(frozen=True)
class RansacParams:
    max_iterations: int = 1000
    inlier_threshold: float = 1.0      # pixels
    confidence: float = 0.99
    min_inliers: int = 10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _hartley_normalization(points: np.ndarray):
    """Similarity transform taking points to zero mean, mean distance sqrt(2)."""
    mean = points.mean(axis=0)
    dist = np.linalg.norm(points - mean, axis=1).mean()
    scale = np.sqrt(2.0) / max(dist, 1e-12)
    T = np.array([[scale, 0.0, -scale * mean[0]],
                  [0.0, scale, -scale * mean[1]],
                  [0.0, 0.0, 1.0]])
    return (points - mean) * scale, T


def _homogeneous(points: np.ndarray) -> np.ndarray:
    return np.c_[points, np.ones(len(points))]


def _nullspace_vector(A: np.ndarray) -> np.ndarray:
    """Right singular vector of the smallest singular value of A.

    Zero-pads systems with fewer rows than columns so the nullspace is not
    truncated by the economical SVD.
    """
    if A.shape[0] < A.shape[1]:
        A = np.vstack([A, np.zeros((A.shape[1] - A.shape[0], A.shape[1]))])
    _, _, Vt = np.linalg.svd(A, full_matrices=False)
    return Vt[-1]


def project_to_essential_manifold(E: np.ndarray) -> np.ndarray:
    """Force singular values to (1, 1, 0); unit Frobenius-like scaling."""
    U, s, Vt = np.linalg.svd(np.asarray(E, dtype=np.float64))
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        raise InvalidEssentialError("matrix is not rank-2 projectable")
    return U @ np.diag([1.0, 1.0, 0.0]) @ Vt


def _eight_point(src_n: np.ndarray, dst_n: np.ndarray) -> np.ndarray:
    """Essential matrix from >= 8 normalized-coordinate matches (DLT)."""
    s, Ts = _hartley_normalization(src_n)
    d, Td = _hartley_normalization(dst_n)
    # rows of the constraint dst'^T E src' = 0
    A = np.c_[d[:, 0] * s[:, 0], d[:, 0] * s[:, 1], d[:, 0],
              d[:, 1] * s[:, 0], d[:, 1] * s[:, 1], d[:, 1],
              s[:, 0], s[:, 1], np.ones(len(s))]
    E = _nullspace_vector(A).reshape(3, 3)
    E = Td.T @ E @ Ts
    return project_to_essential_manifold(E)


def _eight_point_batch(src_n, dst_n, samples):
    """Essential hypotheses for a (B, 8) index batch; (B, 3, 3) array."""
    s = src_n[samples]                      # (B, 8, 2)
    d = dst_n[samples]
    ones = np.ones(s.shape[:2])
    A = np.stack([d[..., 0] * s[..., 0], d[..., 0] * s[..., 1], d[..., 0],
                  d[..., 1] * s[..., 0], d[..., 1] * s[..., 1], d[..., 1],
                  s[..., 0], s[..., 1], ones], axis=2)
    _, sv, Vt = np.linalg.svd(A)
    E = Vt[:, -1, :].reshape(-1, 3, 3)
    U, s3, Vt3 = np.linalg.svd(E)
    ok = s3[:, 1] > 1e-12
    diag = np.zeros_like(E)
    diag[:, 0, 0] = 1.0
    diag[:, 1, 1] = 1.0
    E = U @ diag @ Vt3
    return E, ok


def sampson_distance(F: np.ndarray, src_px: np.ndarray, dst_px: np.ndarray) -> np.ndarray:
    """First-order geometric distance (pixels) to the epipolar constraint."""
    x1 = _homogeneous(src_px)
    x2 = _homogeneous(dst_px)
    Fx1 = x1 @ F.T                          # (N, 3) rows F @ x1
    Ftx2 = x2 @ F                           # (N, 3) rows F^T @ x2
    num = np.abs(np.sum(x2 * Fx1, axis=1))
    den = np.sqrt(Fx1[:, 0] ** 2 + Fx1[:, 1] ** 2 + Ftx2[:, 0] ** 2 + Ftx2[:, 1] ** 2)
    return num / np.maximum(den, 1e-300)


def _adaptive_trials(inlier_ratio: float, sample_size: int, confidence: float,
                     cap: int) -> int:
    if inlier_ratio <= 0.0:
        return cap
    good = inlier_ratio ** sample_size
    if good >= 1.0:
        return 0
    denom = np.log1p(-min(good, 1.0 - 1e-16))
    return min(cap, int(np.ceil(np.log(1.0 - confidence) / denom)))


def estimate_essential_ransac(src_px: np.ndarray, dst_px: np.ndarray,
                              intrinsics: Intrinsics, params: RansacParams,
                              seed=0):
    """Essential matrix via seeded RANSAC on the normalized 8-point solver.

    Matches are pixel coordinates; (R, t) of the encoded pose map source-view
    coordinates into the destination view. Residuals are Sampson distances in
    pixels. Returns (E, inlier_mask).
    """
    src_px = np.asarray(src_px, dtype=np.float64)
    dst_px = np.asarray(dst_px, dtype=np.float64)
    n = len(src_px)
    if n < 8:
        raise InsufficientMatchesError(f"essential estimation needs >= 8 matches, got {n}")
    rng = as_rng(seed)

    src_n = intrinsics.normalize(src_px)
    dst_n = intrinsics.normalize(dst_px)
    Kinv = intrinsics.inverse_matrix

    best_count = -1
    best_mask = None
    best_E = None
    done = 0
    needed = params.max_iterations
    while done < needed:
        batch = min(_HYPOTHESIS_CHUNK, needed - done)
        samples = np.stack([rng.choice(n, size=8, replace=False) for _ in range(batch)])
        Es, ok = _eight_point_batch(src_n, dst_n, samples)
        for E, valid in zip(Es, ok):
            done += 1
            if not valid:
                continue
            F = Kinv.T @ E @ Kinv
            d = sampson_distance(F, src_px, dst_px)
            mask = d <= params.inlier_threshold
            count = int(mask.sum())
            if count > best_count:
                best_count = count
                best_mask = mask
                best_E = E
                needed = min(needed,
                             done + _adaptive_trials(count / n, 8, params.confidence,
                                                     params.max_iterations))
    if best_E is None or best_count < max(params.min_inliers, 8):
        raise NoConsensusError(f"essential RANSAC found only {max(best_count, 0)} inliers")

    # least-squares refit over the inlier set; keep only if it loses nothing
    try:
        E_refit = _eight_point(src_n[best_mask], dst_n[best_mask])
        d = sampson_distance(Kinv.T @ E_refit @ Kinv, src_px, dst_px)
        mask_refit = d <= params.inlier_threshold
        if mask_refit.sum() >= best_count:
            best_E, best_mask = E_refit, mask_refit
    except (InvalidEssentialError, np.linalg.LinAlgError):
        pass
    return best_E, best_mask


_W_DECOMPOSE = np.array([[0.0, -1.0, 0.0],
                         [1.0, 0.0, 0.0],
                         [0.0, 0.0, 1.0]])


def _depth_signs(R: np.ndarray, t: np.ndarray, src_n: np.ndarray, dst_n: np.ndarray):
    """Per-match depths in both views via the two-ray linear solve."""
    rs = _homogeneous(src_n)                 # source ray directions
    rd = _homogeneous(dst_n)                 # destination ray directions
    a = rs @ R.T                             # (N, 3) rotated source rays
    # z_src * (R rs) - z_dst * rd = -t, least squares per match
    a11 = np.sum(a * a, axis=1)
    a12 = -np.sum(a * rd, axis=1)
    a22 = np.sum(rd * rd, axis=1)
    b1 = -a @ t
    b2 = rd @ t
    det = a11 * a22 - a12 * a12
    det = np.where(np.abs(det) < 1e-300, 1e-300, det)
    z_src = (b1 * a22 - a12 * b2) / det
    z_dst = (a11 * b2 - a12 * b1) / det
    return z_src, z_dst


def decompose_essential(E: np.ndarray, src_px: np.ndarray, dst_px: np.ndarray,
                        intrinsics: Intrinsics):
    """Recover (R, unit t, cheirality_count) from an essential matrix.

    Of the four pose candidates, returns the one for which the most matches
    triangulate in front of both cameras; the count is that maximum.
    """
    src_px = np.asarray(src_px, dtype=np.float64)
    if len(src_px) == 0:
        raise InsufficientMatchesError("cheirality needs at least one match")
    U, s, Vt = np.linalg.svd(np.asarray(E, dtype=np.float64))
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        raise InvalidEssentialError("matrix is not rank-2 projectable")
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    R1 = U @ _W_DECOMPOSE @ Vt
    R2 = U @ _W_DECOMPOSE.T @ Vt
    t = U[:, 2]

    src_n = intrinsics.normalize(src_px)
    dst_n = intrinsics.normalize(np.asarray(dst_px, dtype=np.float64))
    best = (-1, None, None)
    for R in (R1, R2):
        for tc in (t, -t):
            z1, z2 = _depth_signs(R, tc, src_n, dst_n)
            count = int(((z1 > 0) & (z2 > 0)).sum())
            if count > best[0]:
                best = (count, R, tc)
    count, R, tc = best
    return R, tc / np.linalg.norm(tc), count


def _homography_dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT homography mapping src pixels to dst pixels."""
    s, Ts = _hartley_normalization(src)
    d, Td = _hartley_normalization(dst)
    n = len(s)
    A = np.zeros((2 * n, 9))
    A[0::2, 0] = -s[:, 0]
    A[0::2, 1] = -s[:, 1]
    A[0::2, 2] = -1.0
    A[0::2, 6] = d[:, 0] * s[:, 0]
    A[0::2, 7] = d[:, 0] * s[:, 1]
    A[0::2, 8] = d[:, 0]
    A[1::2, 3] = -s[:, 0]
    A[1::2, 4] = -s[:, 1]
    A[1::2, 5] = -1.0
    A[1::2, 6] = d[:, 1] * s[:, 0]
    A[1::2, 7] = d[:, 1] * s[:, 1]
    A[1::2, 8] = d[:, 1]
    H = _nullspace_vector(A).reshape(3, 3)
    H = np.linalg.inv(Td) @ H @ Ts
    return _normalize_homography(H)


def _normalize_homography(H: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(H)
    if norm < 1e-300 or abs(np.linalg.det(H / norm)) < 1e-12:
        raise np.linalg.LinAlgError("degenerate homography")
    H = H / norm
    # deterministic sign
    flat = H.ravel()
    lead = flat[np.argmax(np.abs(flat))]
    return H if lead >= 0 else -H


def _apply_homography(H: np.ndarray, points: np.ndarray) -> np.ndarray:
    p = _homogeneous(points) @ H.T
    return p[:, :2] / p[:, 2:3]


def homography_transfer_error(H: np.ndarray, src_px: np.ndarray,
                              dst_px: np.ndarray) -> np.ndarray:
    """Symmetric transfer error in pixels: rms of the two transfer distances."""
    Hinv = np.linalg.inv(H)
    d1 = np.linalg.norm(_apply_homography(H, src_px) - dst_px, axis=1)
    d2 = np.linalg.norm(_apply_homography(Hinv, dst_px) - src_px, axis=1)
    return np.sqrt(0.5 * (d1 ** 2 + d2 ** 2))


def estimate_homography_ransac(src_px: np.ndarray, dst_px: np.ndarray,
                               params: RansacParams, seed=0):
    """Plane-projective fit via seeded RANSAC on 4-point DLT hypotheses.

    Residuals are symmetric transfer errors in pixels. Returns (H, inlier_mask)
    with H scaled to unit Frobenius norm.
    """
    src_px = np.asarray(src_px, dtype=np.float64)
    dst_px = np.asarray(dst_px, dtype=np.float64)
    n = len(src_px)
    if n < 4:
        raise InsufficientMatchesError(f"homography estimation needs >= 4 matches, got {n}")
    rng = as_rng(seed)

    best_count = -1
    best_mask = None
    best_H = None
    done = 0
    needed = params.max_iterations
    while done < needed:
        batch = min(_HYPOTHESIS_CHUNK, needed - done)
        for _ in range(batch):
            done += 1
            sample = rng.choice(n, size=4, replace=False)
            try:
                H = _homography_dlt(src_px[sample], dst_px[sample])
            except np.linalg.LinAlgError:
                continue
            d = homography_transfer_error(H, src_px, dst_px)
            mask = d <= params.inlier_threshold
            count = int(mask.sum())
            if count > best_count:
                best_count = count
                best_mask = mask
                best_H = H
                needed = min(needed,
                             done + _adaptive_trials(count / n, 4, params.confidence,
                                                     params.max_iterations))
    if best_H is None or best_count < max(params.min_inliers, 4):
        raise NoConsensusError(f"homography RANSAC found only {max(best_count, 0)} inliers")

    try:
        H_refit = _homography_dlt(src_px[best_mask], dst_px[best_mask])
        d = homography_transfer_error(H_refit, src_px, dst_px)
        mask_refit = d <= params.inlier_threshold
        if mask_refit.sum() >= best_count:
            best_H, best_mask = H_refit, mask_refit
    except np.linalg.LinAlgError:
        pass
    return best_H, best_mask
