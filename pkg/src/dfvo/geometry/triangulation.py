"""Linear (DLT) two-view triangulation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dfvo.exceptions import DegenerateTriangulationError
from dfvo.geometry.transforms import Intrinsics, RigidTransform


@dataclass
class PointCloudSparse:
    """3D points in the source-view camera frame, tagged with their pixels."""

    pixels: np.ndarray            # (N, 2) source-view pixel coordinates
    points: np.ndarray            # (N, 3) camera-frame points
    dropped: int = 0              # matches rejected for nonpositive depth

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64).reshape(-1, 2)
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if len(self.pixels) != len(self.points):
            raise ValueError("pixels/points length mismatch")

    def __len__(self) -> int:
        return len(self.points)


def triangulate(src_px: np.ndarray, dst_px: np.ndarray, intrinsics: Intrinsics,
                relative_pose: RigidTransform) -> PointCloudSparse:
    """DLT-triangulate pixel matches given the source-to-destination pose.

    The source camera is taken as the origin; relative_pose maps source-frame
    coordinates into the destination frame. Points with nonpositive depth in
    either view are dropped and counted in the result.
    """
    if np.linalg.norm(relative_pose.translation) < 1e-12:
        raise DegenerateTriangulationError("zero baseline")
    src_px = np.asarray(src_px, dtype=np.float64).reshape(-1, 2)
    dst_px = np.asarray(dst_px, dtype=np.float64).reshape(-1, 2)

    K = intrinsics.matrix
    P1 = K @ np.hstack([np.eye(3), np.zeros((3, 1))])
    P2 = K @ np.hstack([relative_pose.rotation, relative_pose.translation[:, None]])

    n = len(src_px)
    A = np.empty((n, 4, 4))
    A[:, 0] = src_px[:, 0:1] * P1[2] - P1[0]
    A[:, 1] = src_px[:, 1:2] * P1[2] - P1[1]
    A[:, 2] = dst_px[:, 0:1] * P2[2] - P2[0]
    A[:, 3] = dst_px[:, 1:2] * P2[2] - P2[1]

    # row normalization keeps the null vector well conditioned
    norms = np.linalg.norm(A, axis=2, keepdims=True)
    A = A / np.maximum(norms, 1e-300)
    _, _, Vt = np.linalg.svd(A)
    Xh = Vt[:, -1, :]
    w = Xh[:, 3]
    w = np.where(np.abs(w) < 1e-300, 1e-300, w)
    X = Xh[:, :3] / w[:, None]

    z_src = X[:, 2]
    z_dst = relative_pose.apply(X)[:, 2]
    keep = (z_src > 0) & (z_dst > 0) & np.all(np.isfinite(X), axis=1)
    return PointCloudSparse(src_px[keep], X[keep], dropped=int((~keep).sum()))
