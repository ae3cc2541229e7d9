"""Brush stroke rasterization.

A stroke paints every pixel whose center lies within width/2 of its
flattened polyline (round caps and joins fall out of the distance rule).
Coverage is binary and the color fully opaque, so equal inputs always
produce byte-equal output. Pixel (col, row) has its center at
(col + 0.5, row + 0.5) in stroke coordinates.
"""

from __future__ import annotations

import math

import numpy as np

from ..document.types import Stroke
from .image import RasterImage
from .paths import DEFAULT_TOLERANCE, flatten_path


def parse_hex_color(color: str) -> tuple[int, int, int]:
    return (int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16))


def _segment_mask(mask, ax, ay, bx, by, radius):
    """Mark pixels within ``radius`` of segment (a, b) in ``mask``."""
    height, width = mask.shape
    lo_x = max(int(math.floor(min(ax, bx) - radius - 0.5)), 0)
    hi_x = min(int(math.ceil(max(ax, bx) + radius - 0.5)), width - 1)
    lo_y = max(int(math.floor(min(ay, by) - radius - 0.5)), 0)
    hi_y = min(int(math.ceil(max(ay, by) + radius - 0.5)), height - 1)
    if lo_x > hi_x or lo_y > hi_y:
        return
    cols = np.arange(lo_x, hi_x + 1, dtype=np.float64) + 0.5
    rows = np.arange(lo_y, hi_y + 1, dtype=np.float64) + 0.5
    px, py = np.meshgrid(cols, rows)
    dx = bx - ax
    dy = by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0:
        dist_sq = (px - ax) ** 2 + (py - ay) ** 2
    else:
        t = ((px - ax) * dx + (py - ay) * dy) / seg_sq
        np.clip(t, 0.0, 1.0, out=t)
        dist_sq = (px - (ax + t * dx)) ** 2 + (py - (ay + t * dy)) ** 2
    hit = dist_sq <= radius * radius
    mask[lo_y : hi_y + 1, lo_x : hi_x + 1] |= hit


def stroke_coverage(
    points: list[tuple[float, float]], width: float, height: int, img_width: int
) -> np.ndarray:
    mask = np.zeros((height, img_width), dtype=bool)
    radius = width / 2.0
    if len(points) == 1:
        ax, ay = points[0]
        _segment_mask(mask, ax, ay, ax, ay, radius)
        return mask
    for (ax, ay), (bx, by) in zip(points, points[1:]):
        _segment_mask(mask, ax, ay, bx, by, radius)
    return mask


def rasterize_stroke(
    target: RasterImage, stroke: Stroke, tolerance: float = DEFAULT_TOLERANCE
) -> RasterImage:
    """Composite one stroke source-over onto a copy of ``target``.

    Geometry outside the image clips silently. Callers skip undone
    strokes.
    """
    points = flatten_path(stroke.path, tolerance)
    mask = stroke_coverage(points, stroke.width, target.height, target.width)
    out = target.pixels.copy()
    r, g, b = parse_hex_color(stroke.color)
    out[mask] = (r, g, b, 255)
    return RasterImage(out)
