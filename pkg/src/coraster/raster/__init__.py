from .image import DimensionMismatch, RasterImage, round_half_up
from .paths import DEFAULT_TOLERANCE, MalformedPath, flatten_path
from .brush import parse_hex_color, rasterize_stroke, stroke_coverage
from .filters import apply_pipeline, apply_vca
from .render import (
    AssetStore,
    MissingAsset,
    composite,
    export_image,
    load_png,
    render_document,
    render_layer,
)

__all__ = [
    "AssetStore",
    "DEFAULT_TOLERANCE",
    "DimensionMismatch",
    "MalformedPath",
    "MissingAsset",
    "RasterImage",
    "apply_pipeline",
    "apply_vca",
    "composite",
    "export_image",
    "flatten_path",
    "load_png",
    "parse_hex_color",
    "rasterize_stroke",
    "render_document",
    "render_layer",
    "round_half_up",
    "stroke_coverage",
]
