import math
import random

import numpy as np
import pytest

from conftest import LISTING_PATH, add_layer, change

from coraster.document import apply_change, load_document, new_document, save_document
from coraster.document.types import Layer, Stroke, PathCommand, Transform2D, VcaInstance
from coraster.raster import (
    AssetStore,
    DimensionMismatch,
    MissingAsset,
    RasterImage,
    composite,
    export_image,
    load_png,
    rasterize_stroke,
    render_document,
    render_layer,
)


def stroke(path, width=4, color="#FF0000", client="a", sid="S1", undone=False):
    return Stroke(
        stroke_id=sid,
        client_id=client,
        time_stamp=1,
        color=color,
        width=width,
        path=tuple(PathCommand(c[0], tuple(c[1:])) for c in path),
        undone=undone,
    )


class TestRasterizeStroke:
    def test_single_point_paints_a_disc(self):
        img = RasterImage.blank(16, 16)
        out = rasterize_stroke(img, stroke([["M", 5, 5]], width=4))
        # oracle: pixel center within radius 2 of (5, 5)
        for row in range(16):
            for col in range(16):
                inside = math.hypot(col + 0.5 - 5, row + 0.5 - 5) <= 2.0
                painted = tuple(out.pixels[row, col]) == (255, 0, 0, 255)
                blank = tuple(out.pixels[row, col]) == (0, 0, 0, 0)
                assert painted if inside else blank

    def test_stroke_outside_bounds_is_a_noop(self):
        img = RasterImage.blank(8, 8)
        out = rasterize_stroke(img, stroke([["M", 100, 100], ["L", 120, 100]], width=6))
        assert out.tobytes() == img.tobytes()

    def test_determinism(self):
        img = RasterImage.blank(32, 32)
        s = stroke(LISTING_PATH, width=10, color="#795EB3")
        # listing coordinates live around x=450; translate into view
        moved = stroke(
            [[c[0]] + [v - 440 if i % 2 == 0 else v - 20 for i, v in enumerate(c[1:])]
             for c in LISTING_PATH],
            width=10,
            color="#795EB3",
        )
        a = rasterize_stroke(img, moved)
        b = rasterize_stroke(img.copy(), moved)
        assert a.tobytes() == b.tobytes()
        assert a.pixels.sum() > 0

    def test_clipping_safety_fuzz(self):
        rng = random.Random(11)
        img = RasterImage.blank(24, 24)
        for _ in range(60):
            cmds = [["M", rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)]]
            for _ in range(rng.randrange(4)):
                if rng.random() < 0.5:
                    cmds.append(["L", rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)])
                else:
                    cmds.append(
                        ["Q", rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4),
                         rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4)]
                    )
            out = rasterize_stroke(img, stroke(cmds, width=rng.uniform(0.5, 40)))
            assert out.pixels.shape == (24, 24, 4)

    def test_source_over_replaces_underlying_pixels(self):
        img = RasterImage(np.full((8, 8, 4), 255, dtype=np.uint8))
        out = rasterize_stroke(img, stroke([["M", 4, 4]], width=2, color="#00FF00"))
        assert tuple(out.pixels[4, 4]) == (0, 255, 0, 255)
        assert tuple(out.pixels[0, 0]) == (255, 255, 255, 255)


class TestComposite:
    def test_single_opaque_layer_is_identity(self):
        rng = np.random.default_rng(3)
        px = rng.integers(0, 256, size=(5, 7, 4), dtype=np.uint8)
        px[:, :, 3] = 255
        img = RasterImage(px)
        assert composite([img]).tobytes() == img.tobytes()

    def test_red_half_over_blue(self):
        blue = np.zeros((4, 4, 4), dtype=np.uint8)
        blue[:, :] = (0, 0, 255, 255)
        red = np.zeros((4, 4, 4), dtype=np.uint8)
        red[:, :] = (255, 0, 0, 255)
        out = composite([RasterImage(blue), RasterImage(red)], [1.0, 0.5])
        assert np.all(out.pixels == np.array([128, 0, 128, 255], dtype=np.uint8))

    def test_transparent_top_is_neutral(self):
        rng = np.random.default_rng(4)
        bottom = RasterImage(rng.integers(0, 256, size=(6, 6, 4), dtype=np.uint8))
        top = RasterImage.blank(6, 6)
        out = composite([bottom, top])
        assert out.tobytes() == composite([bottom]).tobytes()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            composite([RasterImage.blank(4, 4), RasterImage.blank(5, 4)])

    def test_semitransparent_single_layer_round_trips(self):
        rng = np.random.default_rng(5)
        px = rng.integers(0, 256, size=(5, 5, 4), dtype=np.uint8)
        px[px[:, :, 3] == 0, :3] = 0  # fully transparent pixels carry no color
        img = RasterImage(px)
        assert composite([img]).tobytes() == img.tobytes()


class TestRenderLayer:
    def test_empty_layer_renders_transparent(self):
        layer = Layer(id="L")
        out = render_layer(layer, None, 32, 16)
        assert out.pixels.sum() == 0 and (out.width, out.height) == (32, 16)

    def test_invisible_layer_renders_transparent(self):
        layer = Layer(id="L", visible=False, strokes=(stroke([["M", 5, 5]]),))
        out = render_layer(layer, None, 16, 16)
        assert out.pixels.sum() == 0

    def test_identity_layer_equals_direct_rasterization(self):
        s = stroke(LISTING_PATH, width=10, color="#795EB3")
        layer = Layer(id="L", strokes=(s,))
        direct = rasterize_stroke(RasterImage.blank(600, 100), s)
        via_layer = render_layer(layer, None, 600, 100)
        assert via_layer.tobytes() == direct.tobytes()

    def test_undone_strokes_are_skipped(self):
        s1 = stroke([["M", 3, 3]], sid="S1")
        s2 = stroke([["M", 10, 10]], sid="S2", undone=True)
        layer = Layer(id="L", strokes=(s1, s2))
        out = render_layer(layer, None, 16, 16)
        only_s1 = render_layer(Layer(id="L", strokes=(s1,)), None, 16, 16)
        assert out.tobytes() == only_s1.tobytes()

    def test_missing_asset_raises(self):
        layer = Layer(id="L", asset="gone")
        with pytest.raises(MissingAsset):
            render_layer(layer, AssetStore(), 8, 8)

    def test_rotation_90_matches_numpy_oracle(self):
        rng = np.random.default_rng(6)
        base = rng.integers(0, 256, size=(8, 8, 4), dtype=np.uint8)
        assets = AssetStore({"a": RasterImage(base)})
        layer = Layer(id="L", asset="a", transform=Transform2D(rotation=90))
        out = render_layer(layer, assets, 8, 8)
        assert np.array_equal(out.pixels, np.rot90(base, k=1))

    def test_integer_translation_is_exact(self):
        base = np.zeros((4, 4, 4), dtype=np.uint8)
        base[1, 1] = (10, 20, 30, 255)
        assets = AssetStore({"a": RasterImage(base)})
        layer = Layer(id="L", asset="a", transform=Transform2D(tx=2, ty=1))
        out = render_layer(layer, assets, 4, 4)
        assert tuple(out.pixels[2, 3]) == (10, 20, 30, 255)
        assert out.pixels[1, 1].sum() == 0

    def test_pipeline_applies_before_transform(self):
        base = np.zeros((4, 4, 4), dtype=np.uint8)
        base[0, 0] = (255, 255, 255, 255)
        assets = AssetStore({"a": RasterImage(base)})
        layer = Layer(
            id="L",
            asset="a",
            transform=Transform2D(rotation=180),
            pipeline=(VcaInstance("pixelation", params={"b": 4}),),
        )
        out = render_layer(layer, assets, 4, 4)
        # pixelation averages the single bright pixel across the whole
        # image first; rotation then maps a uniform field onto itself
        mean = np.floor(255 / 16 + 0.5)
        assert np.all(out.pixels[:, :, 0] == mean)


class TestRenderDocument:
    def test_empty_document_is_transparent(self):
        doc = new_document("d", 800, 600, created_at=0)
        out = render_document(doc)
        assert (out.width, out.height) == (800, 600)
        assert out.pixels.sum() == 0

    def test_double_render_byte_equal(self, empty_doc):
        doc = add_layer(empty_doc, "L0")
        doc, _ = apply_change(
            doc,
            change(
                "drawing", "newPath", layerId="L0", strokeId="S1", color="#795EB3",
                width=10, path=LISTING_PATH,
            ),
        )
        doc, _ = apply_change(
            doc, change("pipeline", "addVca", layerId="L0", effect="vignette")
        )
        assert render_document(doc).tobytes() == render_document(doc).tobytes()

    def test_saved_and_reloaded_document_renders_identically(self, empty_doc):
        doc = add_layer(empty_doc, "L0")
        doc, _ = apply_change(
            doc,
            change(
                "drawing", "newPath", layerId="L0", strokeId="S1", color="#12AB34",
                width=6, path=[["M", 10, 10], ["Q", 40, 80, 90, 20]],
            ),
        )
        doc, _ = apply_change(
            doc, change("layer", "updateProperty", layerId="L0", property="opacity", value=0.5)
        )
        reloaded = load_document(save_document(doc))
        assert render_document(reloaded).tobytes() == render_document(doc).tobytes()

    def test_layer_opacity_contributes_at_float_precision(self, empty_doc):
        doc = add_layer(add_layer(empty_doc, "bg"), "fg")
        for layer_id, color in (("bg", "#0000FF"), ("fg", "#FF0000")):
            doc, _ = apply_change(
                doc,
                change(
                    "drawing", "newPath", layerId=layer_id, strokeId=f"S-{layer_id}",
                    color=color, width=5000, path=[["M", 400, 300]],
                ),
            )
        doc, _ = apply_change(
            doc, change("layer", "updateProperty", layerId="fg", property="opacity", value=0.5)
        )
        out = render_document(doc)
        assert tuple(out.pixels[300, 400]) == (128, 0, 128, 255)


def test_png_export_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    img = RasterImage(rng.integers(0, 256, size=(9, 13, 4), dtype=np.uint8))
    path = tmp_path / "out.png"
    export_image(img, path)
    again = load_png(path)
    assert again.tobytes() == img.tobytes()
    # bit-stable files across repeated exports
    export_image(img, tmp_path / "out2.png")
    assert (tmp_path / "out.png").read_bytes() == (tmp_path / "out2.png").read_bytes()
