"""Camera intrinsics, rigid transforms and closed-form two-view relations.

Conventions used throughout the engine:
  - camera frame: x right, y down, z forward;
  - pixel coordinates are continuous with (0, 0) at the top-left pixel centre;
  - a relative pose (R, t) between a source view A and a destination view B
    maps source-frame coordinates into the destination frame, X_B = R X_A + t;
  - accumulated trajectory poses are camera-to-world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dfvo.exceptions import DegenerateEssentialError


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def inverse_matrix(self) -> np.ndarray:
        return np.array([[1.0 / self.fx, 0.0, -self.cx / self.fx],
                         [0.0, 1.0 / self.fy, -self.cy / self.fy],
                         [0.0, 0.0, 1.0]])

    def normalize(self, pixels: np.ndarray) -> np.ndarray:
        """Pixels (N, 2) to normalized image coordinates (N, 2)."""
        pixels = np.asarray(pixels, dtype=np.float64)
        return np.stack([(pixels[:, 0] - self.cx) / self.fx,
                         (pixels[:, 1] - self.cy) / self.fy], axis=1)

    def project(self, points: np.ndarray) -> np.ndarray:
        """Camera-frame points (N, 3) to pixels (N, 2); caller checks z > 0."""
        points = np.asarray(points, dtype=np.float64)
        z = points[:, 2]
        return np.stack([self.fx * points[:, 0] / z + self.cx,
                         self.fy * points[:, 1] / z + self.cy], axis=1)

    def back_project(self, pixels: np.ndarray, depths: np.ndarray) -> np.ndarray:
        """Pixels (N, 2) with depths (N,) to camera-frame points (N, 3)."""
        n = self.normalize(pixels)
        depths = np.asarray(depths, dtype=np.float64)
        return np.stack([n[:, 0] * depths, n[:, 1] * depths, depths], axis=1)


_ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) transform: rotation (3, 3) and translation (3,)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if np.abs(R.T @ R - np.eye(3)).max() > _ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHONORMAL_TOL:
            raise ValueError("rotation determinant is not +1")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T: np.ndarray, orthonormalize: bool = False) -> "RigidTransform":
        T = np.asarray(T, dtype=np.float64)
        R = T[:3, :3]
        if orthonormalize:
            R = nearest_rotation(R)
        return cls(R, T[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Composition self * other, with the rotation re-orthonormalized."""
        R = nearest_rotation(self.rotation @ other.rotation)
        t = self.rotation @ other.translation + self.translation
        return RigidTransform(R, t)


def nearest_rotation(M: np.ndarray) -> np.ndarray:
    """Closest rotation matrix in the Frobenius sense."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    S = np.eye(3)
    S[2, 2] = np.sign(np.linalg.det(U @ Vt))
    return U @ S @ Vt


def rotation_angle(R: np.ndarray) -> float:
    """Rotation angle in radians of a rotation matrix.

    Uses atan2 of the axis part against the trace, which stays accurate for
    very small angles where arccos of the trace loses precision.
    """
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = np.linalg.norm(axis) / 2.0
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arctan2(s, c))


def skew_symmetric(t: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew_symmetric(t) @ v == cross(t, v)."""
    t = np.asarray(t, dtype=np.float64).reshape(3)
    return np.array([[0.0, -t[2], t[1]],
                     [t[2], 0.0, -t[0]],
                     [-t[1], t[0], 0.0]])


def essential_from_pose(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Essential matrix of the relative pose X_dst = R X_src + t.

    Satisfies  x_dst^T E x_src = 0  for normalized image coordinates of any
    point visible in both views.
    """
    t = np.asarray(translation, dtype=np.float64).reshape(3)
    if np.linalg.norm(t) == 0.0:
        raise DegenerateEssentialError("zero translation has no essential matrix")
    return skew_symmetric(t) @ np.asarray(rotation, dtype=np.float64)


def fundamental_from_essential(E: np.ndarray, intrinsics: Intrinsics) -> np.ndarray:
    """Pixel-coordinate epipolar matrix: p_dst^T F p_src = 0."""
    Kinv = intrinsics.inverse_matrix
    return Kinv.T @ np.asarray(E, dtype=np.float64) @ Kinv


def reproject_points(intrinsics: Intrinsics, pose: RigidTransform,
                     pixels: np.ndarray, depths: np.ndarray):
    """Map source-view pixels at given depths into the destination view.

    Returns (pixels_dst (N, 2), depth_dst (N,), in_front (N,)); projected
    coordinates where in_front is False are meaningless.
    """
    X = intrinsics.back_project(pixels, depths)
    Y = pose.apply(X)
    z = Y[:, 2]
    in_front = z > 0
    zsafe = np.where(in_front, z, 1.0)
    px = np.stack([intrinsics.fx * Y[:, 0] / zsafe + intrinsics.cx,
                   intrinsics.fy * Y[:, 1] / zsafe + intrinsics.cy], axis=1)
    return px, z, in_front


def reproject(intrinsics: Intrinsics, depth: float, pose: RigidTransform,
              pixel: np.ndarray):
    """Single-pixel reprojection; returns (pixel_dst, depth_dst, in_front)."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    px, z, ok = reproject_points(intrinsics, pose,
                                 np.asarray(pixel, dtype=np.float64).reshape(1, 2),
                                 np.array([depth]))
    return px[0], float(z[0]), bool(ok[0])
