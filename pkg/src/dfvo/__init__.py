"""Monocular visual odometry on top of dense depth and bidirectional flow rasters.

The engine consumes per-frame depth maps and forward/backward optical flow
(typically produced by neural networks, or by the built-in synthetic renderer),
selects high-quality sparse correspondences via forward-backward flow
consistency, tracks the camera with essential-matrix or PnP geometry chosen by
GRIC model selection, and recovers the translation scale against the depth
input so the trajectory does not drift in scale.
"""

from dfvo.geometry.transforms import Intrinsics, RigidTransform
from dfvo.rasters import DepthMap, FlowField

__version__ = "0.1.0"

__all__ = ["Intrinsics", "RigidTransform", "DepthMap", "FlowField", "__version__"]
