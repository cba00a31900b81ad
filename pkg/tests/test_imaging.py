import io

import numpy as np
import pytest
from PIL import Image

from infostyle.errors import DecodeError
from infostyle.imaging import (
    WINDOW_HEIGHT,
    WINDOW_WIDTH,
    decode_image,
    encode_png,
    is_landscape,
    load_corpus_paths,
    normalize_window,
)

from conftest import random_image, solid_image


def png_bytes(arr, mode="RGB"):
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


class TestDecode:
    def test_single_red_pixel(self):
        data = png_bytes(np.array([[[255, 0, 0]]], dtype=np.uint8))
        img = decode_image(data)
        assert img.shape == (1, 1, 3)
        assert tuple(img[0, 0]) == (255, 0, 0)

    def test_full_transparency_composites_to_white(self):
        rgba = np.zeros((4, 5, 4), dtype=np.uint8)
        rgba[:, :, :3] = (10, 200, 30)  # color should be invisible
        data = png_bytes(rgba, mode="RGBA")
        img = decode_image(data)
        assert (img == 255).all()

    def test_partial_alpha_blends_over_white(self):
        rgba = np.zeros((1, 1, 4), dtype=np.uint8)
        rgba[0, 0] = (0, 0, 0, 128)
        img = decode_image(png_bytes(rgba, mode="RGBA"))
        # black at ~50% over white lands mid-gray
        assert 120 <= img[0, 0, 0] <= 135

    def test_truncated_jpeg_raises(self, rng):
        buf = io.BytesIO()
        Image.fromarray(random_image(rng, 32, 32)).save(buf, format="JPEG")
        with pytest.raises(DecodeError):
            decode_image(buf.getvalue()[: len(buf.getvalue()) // 2])

    def test_garbage_raises(self):
        with pytest.raises(DecodeError):
            decode_image(b"this is not an image at all")

    def test_jpeg_roundtrip_shape(self, rng):
        buf = io.BytesIO()
        arr = random_image(rng, 20, 14)
        Image.fromarray(arr).save(buf, format="JPEG", quality=95)
        img = decode_image(buf.getvalue())
        assert img.shape == (14, 20, 3)

    def test_grayscale_png_expands_to_rgb(self):
        gray = np.full((6, 7), 77, dtype=np.uint8)
        img = decode_image(png_bytes(gray, mode="L"))
        assert img.shape == (6, 7, 3)
        assert (img == 77).all()


class TestNormalizeWindow:
    def test_landscape_crop_only(self):
        # 900x450: height already matches, width crops to the middle 360
        img = random_image(np.random.default_rng(7), 900, 450)
        out = normalize_window(img)
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)
        np.testing.assert_array_equal(out, img[:, 270:630])

    def test_window_size_is_fixed_point(self, rng):
        img = random_image(rng, WINDOW_WIDTH, WINDOW_HEIGHT)
        np.testing.assert_array_equal(normalize_window(img), img)

    def test_tall_portrait_scales_then_crops(self):
        # 180x900 doubles to 360x1800, then center-crops vertically
        img = solid_image(180, 900, (10, 20, 30))
        out = normalize_window(img)
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)
        assert (out == (10, 20, 30)).all()

    def test_square_treated_as_landscape(self):
        img = solid_image(100, 100, (5, 5, 5))
        out = normalize_window(img)
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)
        assert (out == 5).all()  # scaled to 450x450, cropped, no padding

    def test_slightly_tall_portrait_pads_with_white(self):
        # 100x110 scales to 360x396; 54 rows of white padding appear
        img = solid_image(100, 110, (0, 0, 0))
        out = normalize_window(img)
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)
        assert (out[0] == 255).all() and (out[-1] == 255).all()
        assert (out[225] == 0).all()

    def test_degenerate_single_pixel(self):
        out = normalize_window(solid_image(1, 1, (9, 9, 9)))
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)

    @pytest.mark.parametrize("w,h", [(1, 1), (3, 1000), (1000, 3), (359, 451), (361, 449), (37, 41)])
    def test_output_dims_always_canonical(self, rng, w, h):
        out = normalize_window(random_image(rng, w, h))
        assert out.shape == (WINDOW_HEIGHT, WINDOW_WIDTH, 3)

    def test_idempotent_pixel_exact(self, rng):
        for w, h in [(123, 456), (800, 600), (360, 450), (50, 50), (1, 7)]:
            once = normalize_window(random_image(rng, w, h))
            np.testing.assert_array_equal(normalize_window(once), once)

    def test_orientation_rule(self):
        assert is_landscape(np.zeros((10, 10, 3), dtype=np.uint8))
        assert is_landscape(np.zeros((10, 11, 3), dtype=np.uint8))
        assert not is_landscape(np.zeros((11, 10, 3), dtype=np.uint8))


class TestCorpusListing:
    def test_directory_scan(self, tmp_path, rng):
        for name in ["b.png", "a.jpg", "notes.txt"]:
            (tmp_path / name).write_bytes(b"x")
        paths = load_corpus_paths(str(tmp_path))
        assert sorted(paths) == ["a", "b"]

    def test_manifest_wins(self, tmp_path):
        (tmp_path / "x.png").write_bytes(b"x")
        (tmp_path / "corpus.jsonl").write_text('{"id": "custom", "path": "x.png"}\n')
        paths = load_corpus_paths(str(tmp_path))
        assert list(paths) == ["custom"]
        assert paths["custom"].endswith("x.png")


def test_encode_png_roundtrip(rng):
    img = random_image(rng, 13, 17)
    np.testing.assert_array_equal(decode_image(encode_png(img)), img)
