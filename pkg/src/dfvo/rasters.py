"""Dense raster types (depth, flow) and bilinear sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FlowField:
    """Per-pixel 2-vector displacement, data[y, x] = (dx, dy) in pixels."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise ValueError(f"flow data must be (H, W, 2), got {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("flow dimensions must be positive")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape[:2]


@dataclass
class DepthMap:
    """Per-pixel depth in scene units; valid where positive and finite."""

    data: np.ndarray
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"depth data must be (H, W), got {self.data.shape}")
        if self.valid is None:
            self.valid = np.isfinite(self.data) & (self.data > 0)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != self.data.shape:
                raise ValueError("validity mask shape mismatch")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


def bilinear_sample(field: np.ndarray, points: np.ndarray):
    """Sample a (H, W) or (H, W, C) raster at continuous pixel positions.

    Points are (N, 2) as (x, y) with (0, 0) at the top-left pixel centre.
    Returns (values, inside) where inside marks points within
    [0, W-1] x [0, H-1]; values at outside points are clamped-edge samples
    and should be ignored.
    """
    field = np.asarray(field)
    h, w = field.shape[:2]
    points = np.asarray(points, dtype=np.float64)
    x = points[:, 0]
    y = points[:, 1]
    # tolerate roundoff at the image border
    eps = 1e-9
    inside = (x >= -eps) & (x <= w - 1.0 + eps) & (y >= -eps) & (y <= h - 1.0 + eps)
    inside &= np.isfinite(x) & np.isfinite(y)

    xc = np.clip(np.nan_to_num(x, nan=0.0), 0.0, w - 1.0)
    yc = np.clip(np.nan_to_num(y, nan=0.0), 0.0, h - 1.0)
    # right/bottom edges fold into the last interior cell with weight 1
    x0 = np.minimum(np.floor(xc).astype(np.int64), w - 2) if w > 1 else np.zeros(len(xc), np.int64)
    y0 = np.minimum(np.floor(yc).astype(np.int64), h - 2) if h > 1 else np.zeros(len(yc), np.int64)
    x0 = np.maximum(x0, 0)
    y0 = np.maximum(y0, 0)
    ax = xc - x0
    ay = yc - y0

    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    f00 = field[y0, x0]
    f10 = field[y0, x1]
    f01 = field[y1, x0]
    f11 = field[y1, x1]
    if field.ndim == 3:
        ax = ax[:, None]
        ay = ay[:, None]
    values = ((1 - ax) * (1 - ay) * f00 + ax * (1 - ay) * f10
              + (1 - ax) * ay * f01 + ax * ay * f11)
    return values, inside


def pixel_grid(height: int, width: int) -> np.ndarray:
    """All integer pixel centres as (H*W, 2) array of (x, y), row-major."""
    ys, xs = np.mgrid[0:height, 0:width]
    return np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
