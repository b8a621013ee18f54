"""Perspective-n-point pose estimation.

Minimal three-point resection (Grunert's distance quartic) hypotheses run
inside a seeded RANSAC, a fourth sampled point disambiguates, and the winning
pose is polished by Gauss-Newton on the pixel reprojection objective over the
inliers. The refined pose is kept only if it does not increase the inlier
reprojection RMS of the best hypothesis.
"""

from __future__ import annotations

import numpy as np

from dfvo.exceptions import InsufficientMatchesError, NoConsensusError
from dfvo.geometry.estimation import RansacParams, _adaptive_trials, as_rng
from dfvo.geometry.transforms import Intrinsics, RigidTransform, nearest_rotation

_GN_MAX_ITERATIONS = 20
_GN_STEP_TOL = 1e-10


def _absolute_orientation(X: np.ndarray, Y: np.ndarray):
    """Rigid (R, t) with Y ~= R X + t, least squares over matched points."""
    mx = X.mean(axis=0)
    my = Y.mean(axis=0)
    H = (X - mx).T @ (Y - my)
    U, _, Vt = np.linalg.svd(H)
    S = np.eye(3)
    S[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ S @ U.T
    return R, my - R @ mx


def _p3p(points: np.ndarray, bearings: np.ndarray):
    """Camera poses putting three object points onto three unit bearings.

    Solves Grunert's law-of-cosines system through its resultant quartic.
    Returns a list of (R, t) with camera-frame coordinates R X + t.
    """
    Xw = points
    f = bearings
    a = np.linalg.norm(Xw[1] - Xw[2])
    b = np.linalg.norm(Xw[0] - Xw[2])
    c = np.linalg.norm(Xw[0] - Xw[1])
    if min(a, b, c) < 1e-12 or b < 1e-12:
        return []
    p = 2.0 * float(f[1] @ f[2])
    q = 2.0 * float(f[0] @ f[2])
    r = 2.0 * float(f[0] @ f[1])
    A = (a * a) / (b * b)
    B = (c * c) / (b * b)

    c4 = A**2 - 2*A*B - 2*A + B**2 - B*p**2 + 2*B + 1
    c3 = -2*A**2*q + 4*A*B*q + A*p*r + 2*A*q - 2*B**2*q + B*p**2*q + B*p*r - 2*B*q - p*r
    c2 = (A**2*q**2 + 2*A**2 - 2*A*B*q**2 - 4*A*B - A*p*q*r - A*r**2
          + B**2*q**2 + 2*B**2 - B*p**2 - B*p*q*r + p**2 + r**2 - 2)
    c1 = -2*A**2*q + 4*A*B*q + A*p*r + A*q*r**2 - 2*A*q - 2*B**2*q + B*p*r + 2*B*q - p*r
    c0 = A**2 - 2*A*B - A*r**2 + 2*A + B**2 - 2*B + 1

    coeffs = np.array([c4, c3, c2, c1, c0])
    if not np.all(np.isfinite(coeffs)) or abs(c4) < 1e-14 * max(1.0, np.abs(coeffs).max()):
        return []
    roots = np.roots(coeffs)

    poses = []
    for v in roots:
        if abs(v.imag) > 1e-8 or v.real <= 0:
            continue
        v = float(v.real)
        denom = 1.0 + v * v - v * q
        if denom <= 1e-12:
            continue
        s1 = b / np.sqrt(denom)
        disc = r * r - 4.0 * (1.0 - B * denom)
        if disc < 0:
            continue
        sq = np.sqrt(disc)
        for u in ((r + sq) / 2.0, (r - sq) / 2.0):
            if u <= 0:
                continue
            # the remaining law-of-cosines equation filters wrong pairings
            if abs(u * u + v * v - u * v * p - A * denom) > 1e-6 * (1.0 + A * denom):
                continue
            Yc = np.array([s1 * f[0], u * s1 * f[1], v * s1 * f[2]])
            R, t = _absolute_orientation(Xw, Yc)
            poses.append((R, t))
    return poses


def _reprojection_errors(R, t, points, pixels, intrinsics: Intrinsics):
    Y = points @ R.T + t
    z = Y[:, 2]
    bad = z <= 1e-12
    zs = np.where(bad, 1.0, z)
    px = np.stack([intrinsics.fx * Y[:, 0] / zs + intrinsics.cx,
                   intrinsics.fy * Y[:, 1] / zs + intrinsics.cy], axis=1)
    err = np.linalg.norm(px - pixels, axis=1)
    return np.where(bad, np.inf, err)


def _gauss_newton_pose(R, t, points, pixels, intrinsics: Intrinsics):
    """Minimize the reprojection error; left-perturbation on the rotation."""
    fx, fy = intrinsics.fx, intrinsics.fy
    R = R.copy()
    t = t.copy()

    def residuals(Rc, tc):
        Y = points @ Rc.T + tc
        z = np.maximum(Y[:, 2], 1e-12)
        u = fx * Y[:, 0] / z + intrinsics.cx
        v = fy * Y[:, 1] / z + intrinsics.cy
        return np.c_[u - pixels[:, 0], v - pixels[:, 1]], Y

    res, Y = residuals(R, t)
    cost = float((res ** 2).sum())
    for _ in range(_GN_MAX_ITERATIONS):
        z = np.maximum(Y[:, 2], 1e-12)
        invz = 1.0 / z
        # d(pixel)/d(camera point)
        Ju = np.c_[fx * invz, np.zeros(len(z)), -fx * Y[:, 0] * invz ** 2]
        Jv = np.c_[np.zeros(len(z)), fy * invz, -fy * Y[:, 1] * invz ** 2]
        # camera point w.r.t. (rotation increment, translation increment):
        # dY/dw = -[Y - t]_x, dY/dt = I
        P = Y - t
        JYw = np.zeros((len(z), 3, 3))
        JYw[:, 0, 1] = P[:, 2]
        JYw[:, 0, 2] = -P[:, 1]
        JYw[:, 1, 0] = -P[:, 2]
        JYw[:, 1, 2] = P[:, 0]
        JYw[:, 2, 0] = P[:, 1]
        JYw[:, 2, 1] = -P[:, 0]
        J = np.zeros((2 * len(z), 6))
        J[0::2, :3] = np.einsum("nk,nkj->nj", Ju, JYw)
        J[1::2, :3] = np.einsum("nk,nkj->nj", Jv, JYw)
        J[0::2, 3:] = Ju
        J[1::2, 3:] = Jv
        r = res.reshape(-1)

        JtJ = J.T @ J
        Jtr = J.T @ r
        try:
            delta = np.linalg.solve(JtJ + 1e-14 * np.eye(6), -Jtr)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break

        # step halving keeps the iteration monotone
        improved = False
        for _ in range(10):
            w = delta[:3]
            Wx = np.array([[0.0, -w[2], w[1]],
                           [w[2], 0.0, -w[0]],
                           [-w[1], w[0], 0.0]])
            R_new = nearest_rotation((np.eye(3) + Wx + 0.5 * Wx @ Wx) @ R)
            t_new = t + delta[3:]
            res_new, Y_new = residuals(R_new, t_new)
            cost_new = float((res_new ** 2).sum())
            if cost_new <= cost:
                R, t, res, Y, cost = R_new, t_new, res_new, Y_new, cost_new
                improved = True
                break
            delta = delta / 2.0
        if not improved or np.linalg.norm(delta) < _GN_STEP_TOL:
            break
    return R, t


def solve_pnp_ransac(points: np.ndarray, pixels: np.ndarray, intrinsics: Intrinsics,
                     params: RansacParams, seed=0):
    """Pose from 3D-2D correspondences: P3P RANSAC + Gauss-Newton polish.

    points (N, 3) live in the source-view camera frame; pixels (N, 2) are their
    observations in the destination view. The returned RigidTransform maps
    source-frame coordinates into the destination frame. Returns
    (pose, inlier_mask).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    n = len(points)
    if n < 4:
        raise InsufficientMatchesError(f"PnP needs >= 4 correspondences, got {n}")
    rng = as_rng(seed)

    norm = intrinsics.normalize(pixels)
    bearings = np.c_[norm, np.ones(n)]
    bearings /= np.linalg.norm(bearings, axis=1, keepdims=True)

    best_count = -1
    best_err_sq = np.inf
    best_pose = None
    best_mask = None
    done = 0
    needed = params.max_iterations
    while done < needed:
        done += 1
        sample = rng.choice(n, size=4, replace=False)
        tri, probe = sample[:3], sample[3]
        candidates = _p3p(points[tri], bearings[tri])
        if not candidates:
            continue
        # fourth point picks the physically consistent candidate
        probe_err = [
            _reprojection_errors(R, t, points[probe:probe + 1],
                                 pixels[probe:probe + 1], intrinsics)[0]
            for R, t in candidates
        ]
        R, t = candidates[int(np.argmin(probe_err))]
        err = _reprojection_errors(R, t, points, pixels, intrinsics)
        mask = err <= params.inlier_threshold
        count = int(mask.sum())
        err_sq = float((err[mask] ** 2).sum()) if count else np.inf
        if count > best_count or (count == best_count and err_sq < best_err_sq):
            best_count = count
            best_err_sq = err_sq
            best_pose = (R, t)
            best_mask = mask
            needed = min(needed,
                         done + _adaptive_trials(count / n, 4, params.confidence,
                                                 params.max_iterations))
    if best_pose is None or best_count < max(params.min_inliers, 4):
        raise NoConsensusError(f"PnP RANSAC found only {max(best_count, 0)} inliers")

    R, t = best_pose
    hyp_rms = np.sqrt(best_err_sq / max(best_count, 1))
    R_ref, t_ref = _gauss_newton_pose(R, t, points[best_mask], pixels[best_mask],
                                      intrinsics)
    err_ref = _reprojection_errors(R_ref, t_ref, points, pixels, intrinsics)
    ref_rms = float(np.sqrt((err_ref[best_mask] ** 2).mean()))
    if np.isfinite(ref_rms) and ref_rms <= hyp_rms + 1e-15:
        R, t = R_ref, t_ref
        mask = err_ref <= params.inlier_threshold
        if mask.sum() >= best_count:
            best_mask = mask
    return RigidTransform(nearest_rotation(R), t), best_mask
