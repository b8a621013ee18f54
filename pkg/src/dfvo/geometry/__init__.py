from dfvo.geometry.transforms import (
    Intrinsics,
    RigidTransform,
    essential_from_pose,
    fundamental_from_essential,
    reproject,
    reproject_points,
    skew_symmetric,
)
from dfvo.geometry.estimation import (
    EssentialMatrix,
    Homography,
    RansacParams,
    decompose_essential,
    estimate_essential_ransac,
    estimate_homography_ransac,
    homography_transfer_error,
    sampson_distance,
)
from dfvo.geometry.triangulation import PointCloudSparse, triangulate
from dfvo.geometry.pnp import solve_pnp_ransac

__all__ = [
    "Intrinsics",
    "RigidTransform",
    "EssentialMatrix",
    "Homography",
    "RansacParams",
    "PointCloudSparse",
    "skew_symmetric",
    "essential_from_pose",
    "fundamental_from_essential",
    "reproject",
    "reproject_points",
    "estimate_essential_ransac",
    "estimate_homography_ransac",
    "decompose_essential",
    "sampson_distance",
    "homography_transfer_error",
    "triangulate",
    "solve_pnp_ransac",
]
