"""The five pipeline effects, defined pixel-exactly.

Conventions shared by every effect:
  - channels are normalized to [0, 1] for the math, quantized back with
    round-half-up;
  - the alpha channel passes through untouched;
  - p is the pixel center in [0, 1]^2, m = (0.5, 0.5), and the radial
    coordinate r = |p - m| / 0.5 reaches 1 at edge midpoints and ~1.414 in
    the corners;
  - resampling effects use bilinear interpolation with clamp-to-edge;
  - an effect at its identity parameter returns its input byte-identically.
"""

from __future__ import annotations

import numpy as np

from ..document.types import VcaInstance
from ..effects import FILTER_SPECS
from .image import RasterImage, round_half_up


def _rgb01(img: RasterImage) -> np.ndarray:
    return img.pixels[:, :, :3].astype(np.float64) / 255.0


def _with_rgb01(img: RasterImage, rgb: np.ndarray) -> RasterImage:
    out = img.pixels.copy()
    out[:, :, :3] = round_half_up(np.clip(rgb, 0.0, 1.0) * 255.0)
    return RasterImage(out)


def _bilinear_clamped(channel: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a float channel at fractional pixel-index positions."""
    height, width = channel.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0i = np.clip(x0.astype(np.int64), 0, width - 1)
    x1i = np.clip(x0i + 1, 0, width - 1)
    y0i = np.clip(y0.astype(np.int64), 0, height - 1)
    y1i = np.clip(y0i + 1, 0, height - 1)
    top = channel[y0i, x0i] * (1.0 - fx) + channel[y0i, x1i] * fx
    bottom = channel[y1i, x0i] * (1.0 - fx) + channel[y1i, x1i] * fx
    return top * (1.0 - fy) + bottom * fy


def contrast(img: RasterImage, k: float) -> RasterImage:
    """c' = clamp((c - 0.5) * k + 0.5, 0, 1) per color channel."""
    if k == 1:
        return img
    rgb = (_rgb01(img) - 0.5) * k + 0.5
    return _with_rgb01(img, rgb)


def pixelation(img: RasterImage, b: int) -> RasterImage:
    """b x b block mosaic anchored top-left; each output pixel is the
    arithmetic mean of its block (edge blocks average what exists)."""
    b = int(b)
    if b == 1:
        return img
    height, width = img.height, img.width
    rgb = img.pixels[:, :, :3].astype(np.float64)
    row_starts = np.arange(0, height, b)
    col_starts = np.arange(0, width, b)
    sums = np.add.reduceat(np.add.reduceat(rgb, row_starts, axis=0), col_starts, axis=1)
    row_sizes = np.diff(np.append(row_starts, height))
    col_sizes = np.diff(np.append(col_starts, width))
    counts = np.outer(row_sizes, col_sizes)[:, :, None]
    means = sums / counts
    expanded = np.repeat(np.repeat(means, row_sizes, axis=0), col_sizes, axis=1)
    out = img.pixels.copy()
    out[:, :, :3] = round_half_up(expanded)
    return RasterImage(out)


def _smoothstep(a: float, b: float, x: np.ndarray) -> np.ndarray:
    t = np.clip((x - a) / (b - a), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def vignette(img: RasterImage, s: float) -> RasterImage:
    """Darken towards the border: c' = c * (1 - s * smoothstep(0.5, 1, r)).
    The exact center (r = 0) is always unchanged."""
    if s == 0:
        return img
    height, width = img.height, img.width
    px = (np.arange(width, dtype=np.float64) + 0.5) / width
    py = (np.arange(height, dtype=np.float64) + 0.5) / height
    r = np.hypot(px[None, :] - 0.5, py[:, None] - 0.5) / 0.5
    factor = 1.0 - s * _smoothstep(0.5, 1.0, r)
    return _with_rgb01(img, _rgb01(img) * factor[:, :, None])


def chromatic_aberration(img: RasterImage, o: float) -> RasterImage:
    """Shift the red channel right and the blue channel left by a fraction
    ``o`` of the image width; green and alpha stay put."""
    if o == 0:
        return img
    height, width = img.height, img.width
    shift = o * width
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    xs, ys = np.meshgrid(cols, rows)
    rgb = img.pixels[:, :, :3].astype(np.float64)
    out = img.pixels.copy()
    out[:, :, 0] = round_half_up(_bilinear_clamped(rgb[:, :, 0], xs + shift, ys))
    out[:, :, 2] = round_half_up(_bilinear_clamped(rgb[:, :, 2], xs - shift, ys))
    return RasterImage(out)


def chroma_zoom(img: RasterImage, z: float) -> RasterImage:
    """Per-channel radial zoom about the center: channel i is sampled at
    m + (p - m) / (1 + z * w_i) with w = (-1, 0, +1) for (R, G, B)."""
    if z == 0:
        return img
    height, width = img.height, img.width
    mx = 0.5 * width - 0.5
    my = 0.5 * height - 0.5
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    xs, ys = np.meshgrid(cols, rows)
    rgb = img.pixels[:, :, :3].astype(np.float64)
    out = img.pixels.copy()
    for channel, w in ((0, -1.0), (1, 0.0), (2, 1.0)):
        if w == 0.0:
            continue
        scale = 1.0 + z * w
        sx = mx + (xs - mx) / scale
        sy = my + (ys - my) / scale
        out[:, :, channel] = round_half_up(_bilinear_clamped(rgb[:, :, channel], sx, sy))
    return RasterImage(out)


_EFFECTS = {
    "contrast": contrast,
    "pixelation": pixelation,
    "vignette": vignette,
    "chromaticAberration": chromatic_aberration,
    "chromaZoom": chroma_zoom,
}


def apply_vca(img: RasterImage, vca: VcaInstance) -> RasterImage:
    """Run one pipeline stage. Disabled stages are byte-exact no-ops.

    Raises ValueError on an out-of-range parameter; the protocol layer is
    expected to have rejected such values long before they get here.
    """
    if not vca.enabled:
        return img
    spec = FILTER_SPECS.get(vca.effect)
    if spec is None:
        raise ValueError(f"unknown effect {vca.effect!r}")
    p = spec.param
    value = vca.params.get(p.name, p.default)
    if not (p.lo <= value <= p.hi):
        raise ValueError(f"{vca.effect}.{p.name} out of range: {value}")
    return _EFFECTS[vca.effect](img, value)


def apply_pipeline(img: RasterImage, pipeline) -> RasterImage:
    for vca in pipeline:
        img = apply_vca(img, vca)
    return img
