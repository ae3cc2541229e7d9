"""8-bit RGBA raster carrier used throughout the render pipeline."""

from __future__ import annotations

import numpy as np


class DimensionMismatch(Exception):
    pass


class RasterImage:
    """Row-major RGBA, 8 bits per channel, non-premultiplied.

    The pixel buffer is a (height, width, 4) uint8 array; treat instances
    as immutable once handed out of the pipeline.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        if pixels.ndim != 3 or pixels.shape[2] != 4 or pixels.dtype != np.uint8:
            raise ValueError("expected a (height, width, 4) uint8 array")
        self.pixels = np.ascontiguousarray(pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, width: int, height: int) -> "RasterImage":
        if width < 1 or height < 1:
            raise ValueError("image dimensions must be >= 1")
        return cls(np.zeros((height, width, 4), dtype=np.uint8))

    def copy(self) -> "RasterImage":
        return RasterImage(self.pixels.copy())

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        return (
            isinstance(other, RasterImage)
            and self.pixels.shape == other.pixels.shape
            and np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"RasterImage({self.width}x{self.height})"


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Quantize nonnegative channel values to uint8, halves rounding up."""
    return np.floor(values + 0.5).astype(np.uint8)
