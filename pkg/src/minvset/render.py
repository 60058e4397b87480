"""Rasterise point clouds: white points on black, one pixel of dilation."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DomainError
from .geometry import PointCloud

MARGIN = 0.05


def viewport(points: np.ndarray, width: int, height: int) -> tuple[float, float, float]:
    """``(x0, y0, scale)`` fitting the bounding box plus margin, aspect preserved.

    Pixel ``(col, row)`` shows ``x0 + col / scale + i (y0 - row / scale)``.
    """
    lo_x, hi_x = points.real.min(), points.real.max()
    lo_y, hi_y = points.imag.min(), points.imag.max()
    span_x, span_y = hi_x - lo_x, hi_y - lo_y
    span = max(span_x, span_y)
    if span == 0.0:
        span = max(abs(lo_x), abs(lo_y), 1.0)
    pad = MARGIN * span
    span_x, span_y = span_x + 2 * pad, span_y + 2 * pad
    scale = min(width / max(span_x, 1e-300), height / max(span_y, 1e-300))
    # centre the box on the canvas
    cx, cy = (lo_x + hi_x) / 2, (lo_y + hi_y) / 2
    return cx - width / (2 * scale), cy + height / (2 * scale), scale


def rasterize(cloud, width: int, height: int) -> np.ndarray:
    """``uint8`` image of shape ``(height, width)``; 255 where the cloud is."""
    if width < 1 or height < 1:
        raise DomainError("image size must be positive")
    z = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=complex).ravel()
    z = z[np.isfinite(z)]
    img = np.zeros((height, width), dtype=np.uint8)
    if z.size == 0:
        return img
    x0, y0, scale = viewport(z, width, height)
    col = np.floor((z.real - x0) * scale).astype(np.int64)
    row = np.floor((y0 - z.imag) * scale).astype(np.int64)
    hit = np.zeros((height + 2, width + 2), dtype=bool)
    keep = (col >= 0) & (col < width) & (row >= 0) & (row < height)
    hit[row[keep] + 1, col[keep] + 1] = True
    # 3x3 dilation
    out = np.zeros((height, width), dtype=bool)
    for dr in range(3):
        for dc in range(3):
            out |= hit[dr : dr + height, dc : dc + width]
    img[out] = 255
    return img


def save_png(cloud, path, width: int, height: int) -> None:
    Image.fromarray(rasterize(cloud, width, height)).save(path, format="PNG")


def parse_size(text: str) -> tuple[int, int]:
    """``"800x600"`` -> ``(800, 600)``."""
    try:
        w, h = text.lower().split("x")
        size = int(w), int(h)
    except ValueError:
        raise DomainError(f"bad image size {text!r}; expected WxH") from None
    if min(size) < 1:
        raise DomainError("image size must be positive")
    return size
