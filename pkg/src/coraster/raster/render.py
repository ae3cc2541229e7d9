"""Layer and document rendering.

A layer renders in four stages: base bitmap (image asset, else a blank
transparent canvas), strokes in list order, enabled pipeline effects in
order, then the layer transform resampled into canvas space. Layer opacity
is deliberately NOT baked into the layer raster: the compositor applies it
at float precision so an opacity of 0.5 contributes exactly half, without
an 8-bit quantization in between.

Everything here is a pure function of its inputs; rendering the same
document twice yields byte-equal pixels.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..document.types import Layer, SessionDocument, Transform2D
from .brush import rasterize_stroke
from .filters import apply_pipeline
from .image import DimensionMismatch, RasterImage, round_half_up


class MissingAsset(Exception):
    def __init__(self, layer_id: str, asset: str):
        super().__init__(f"layer {layer_id}: asset {asset!r} not found")
        self.layer_id = layer_id
        self.asset = asset


class AssetStore:
    """Named 8-bit RGBA source bitmaps, usually a session's assets/ dir."""

    def __init__(self, images: Optional[dict[str, RasterImage]] = None):
        self._images = dict(images or {})

    def put(self, name: str, image: RasterImage) -> None:
        self._images[name] = image

    def get(self, name: str) -> Optional[RasterImage]:
        return self._images.get(name)

    @classmethod
    def from_dir(cls, directory: str | Path) -> "AssetStore":
        store = cls()
        directory = Path(directory)
        if directory.is_dir():
            for path in sorted(directory.glob("*.png")):
                store.put(path.stem, load_png(path))
        return store


def load_png(path: str | Path) -> RasterImage:
    with Image.open(path) as img:
        return RasterImage(np.asarray(img.convert("RGBA"), dtype=np.uint8).copy())


def export_image(img: RasterImage, path: str | Path) -> None:
    """Write an 8-bit RGBA PNG."""
    Image.fromarray(img.pixels, "RGBA").save(str(path), format="PNG")


def _resample_transformed(
    base: RasterImage, transform: Transform2D, canvas_w: int, canvas_h: int
) -> RasterImage:
    """Inverse-map canvas pixel centers into layer space and sample the
    base bilinearly (premultiplied, transparent outside the layer)."""
    theta = math.radians(transform.rotation)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    # forward: canvas = R @ S @ (layer - layer_center) + target
    # with R = [[cos, sin], [-sin, cos]] (counter-clockwise on a y-down canvas)
    target_x = canvas_w / 2.0 + transform.tx
    target_y = canvas_h / 2.0 + transform.ty
    cols = np.arange(canvas_w, dtype=np.float64) + 0.5
    rows = np.arange(canvas_h, dtype=np.float64) + 0.5
    dx, dy = np.meshgrid(cols - target_x, rows - target_y)
    # inverse rotation is the transpose
    ux = cos_t * dx - sin_t * dy
    uy = sin_t * dx + cos_t * dy
    lx = ux / transform.scale_x + base.width / 2.0
    ly = uy / transform.scale_y + base.height / 2.0
    # continuous layer coords -> pixel-index space
    xs = lx - 0.5
    ys = ly - 0.5

    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)

    premult = base.pixels.astype(np.float64)
    alpha = premult[:, :, 3:4] / 255.0
    premult[:, :, :3] *= alpha

    out_premult = np.zeros((canvas_h, canvas_w, 4), dtype=np.float64)
    for di, dj, weight in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        yy = y0i + di
        xx = x0i + dj
        valid = (yy >= 0) & (yy < base.height) & (xx >= 0) & (xx < base.width)
        yc = np.clip(yy, 0, base.height - 1)
        xc = np.clip(xx, 0, base.width - 1)
        taps = premult[yc, xc]
        out_premult += np.where(valid[:, :, None], taps, 0.0) * weight[:, :, None]

    out_alpha = out_premult[:, :, 3]
    nonzero = out_alpha > 0
    alpha01 = np.where(nonzero, out_alpha / 255.0, 1.0)
    out = np.zeros((canvas_h, canvas_w, 4), dtype=np.float64)
    out[:, :, :3] = np.where(nonzero[:, :, None], out_premult[:, :, :3] / alpha01[:, :, None], 0.0)
    out[:, :, 3] = out_alpha
    return RasterImage(round_half_up(np.clip(out, 0.0, 255.0)))


def render_layer(
    layer: Layer, assets: Optional[AssetStore], canvas_w: int, canvas_h: int
) -> RasterImage:
    """Render one layer into canvas space (opacity not applied here)."""
    if not layer.visible:
        return RasterImage.blank(canvas_w, canvas_h)
    if layer.asset is not None:
        base = assets.get(layer.asset) if assets is not None else None
        if base is None:
            raise MissingAsset(layer.id, layer.asset)
        base = base.copy()
    else:
        base = RasterImage.blank(canvas_w, canvas_h)
    for stroke in layer.strokes:
        if not stroke.undone:
            base = rasterize_stroke(base, stroke)
    base = apply_pipeline(base, layer.pipeline)
    if layer.transform.is_identity() and base.width == canvas_w and base.height == canvas_h:
        return base
    return _resample_transformed(base, layer.transform, canvas_w, canvas_h)


def composite(layers: list[RasterImage], opacities: Optional[list[float]] = None) -> RasterImage:
    """Source-over, bottom (index 0) to top, with optional per-layer
    opacity applied to alpha at float precision:

        out = src * a_src + dst * a_dst * (1 - a_src)

    accumulated premultiplied, quantized once at the end (round-half-up).
    """
    if not layers:
        raise ValueError("composite needs at least one layer")
    if opacities is None:
        opacities = [1.0] * len(layers)
    if len(opacities) != len(layers):
        raise ValueError("one opacity per layer")
    width, height = layers[0].width, layers[0].height
    for img in layers:
        if img.width != width or img.height != height:
            raise DimensionMismatch(
                f"expected {width}x{height}, got {img.width}x{img.height}"
            )
    acc_rgb = np.zeros((height, width, 3), dtype=np.float64)
    acc_a = np.zeros((height, width), dtype=np.float64)
    for img, opacity in zip(layers, opacities):
        src = img.pixels.astype(np.float64)
        a_src = src[:, :, 3] / 255.0 * opacity
        acc_rgb = src[:, :, :3] * a_src[:, :, None] + acc_rgb * (1.0 - a_src)[:, :, None]
        acc_a = a_src + acc_a * (1.0 - a_src)
    out = np.zeros((height, width, 4), dtype=np.float64)
    nonzero = acc_a > 0
    out[:, :, :3] = np.where(nonzero[:, :, None], acc_rgb / np.where(nonzero, acc_a, 1.0)[:, :, None], 0.0)
    out[:, :, 3] = acc_a * 255.0
    return RasterImage(round_half_up(np.clip(out, 0.0, 255.0)))


def render_document(doc: SessionDocument, assets: Optional[AssetStore] = None) -> RasterImage:
    width, height = doc.meta.width, doc.meta.height
    if not doc.layers:
        return RasterImage.blank(width, height)
    rendered = [render_layer(layer, assets, width, height) for layer in doc.layers]
    return composite(rendered, [layer.opacity for layer in doc.layers])
