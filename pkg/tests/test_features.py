import numpy as np
import pytest

import oracles
from conftest import random_image, solid_image

from infostyle.errors import InvalidParam
from infostyle.features import (
    FEATURE_LENGTHS,
    LBP_UNIFORM_TABLE,
    color_histogram,
    compute_feature,
    grayscale,
    hog,
    hog_cell_histograms,
    lbp,
    lbp_codes,
    luminance_histogram,
)
from infostyle.imaging import WINDOW_HEIGHT, WINDOW_WIDTH


def window_image(rng):
    return random_image(rng, WINDOW_WIDTH, WINDOW_HEIGHT)


class TestColorHistogram:
    def test_all_black(self):
        fv = color_histogram(solid_image(8, 8, (0, 0, 0)))
        expected = np.zeros(30)
        expected[[0, 10, 20]] = 1.0
        np.testing.assert_array_equal(fv.values, expected)

    def test_half_black_half_white(self):
        img = np.zeros((4, 8, 3), dtype=np.uint8)
        img[:, 4:] = 255
        fv = color_histogram(img)
        for c in range(3):
            assert fv.values[c * 10] == 0.5
            assert fv.values[c * 10 + 9] == 0.5
            assert fv.values[c * 10 + 1 : c * 10 + 9].sum() == 0.0

    def test_matches_bruteforce_exactly(self, rng):
        for _ in range(20):
            img = random_image(rng, 8, 8)
            np.testing.assert_array_equal(
                color_histogram(img).values, oracles.color_histogram(img)
            )

    def test_invariant_to_pixel_permutation(self, rng):
        img = random_image(rng, 6, 9)
        flat = img.reshape(-1, 3)
        shuffled = flat[rng.permutation(len(flat))].reshape(img.shape)
        np.testing.assert_array_equal(
            color_histogram(img).values, color_histogram(shuffled).values
        )

    def test_channel_sums(self, rng):
        v = color_histogram(random_image(rng, 11, 5)).values
        for c in range(3):
            assert v[c * 10 : (c + 1) * 10].sum() == pytest.approx(1.0, abs=1e-12)

    def test_boundary_pixel_values(self):
        # 25 sits below the first bin edge at 25.5, 26 above; 255 lands in bin 9
        for value, expected_bin in [(25, 0), (26, 1), (51, 2), (254, 9), (255, 9)]:
            fv = color_histogram(solid_image(2, 2, (value, value, value)))
            assert fv.values[expected_bin] == 1.0


class TestLuminanceHistogram:
    def test_all_white(self):
        fv = luminance_histogram(solid_image(3, 3, (255, 255, 255)))
        assert fv.values[9] == 1.0

    def test_pure_blue_lands_in_bin_one(self):
        # luma of (0,0,255) is 29.07, inside [25.5, 51)
        fv = luminance_histogram(solid_image(3, 3, (0, 0, 255)))
        assert fv.values[1] == 1.0

    def test_matches_bruteforce_exactly(self, rng):
        for _ in range(20):
            img = random_image(rng, 8, 8)
            np.testing.assert_array_equal(
                luminance_histogram(img).values, oracles.luminance_histogram(img)
            )


class TestHog:
    def test_rejects_other_cell_sizes(self, rng):
        img = random_image(rng, 64, 64)
        for bad in (8, 0, 17, -16):
            with pytest.raises(InvalidParam):
                hog(img, bad)

    def test_lengths_on_canonical_window(self, rng):
        img = window_image(rng)
        assert len(hog(img, 16)) == FEATURE_LENGTHS["hog16"] == 5544
        assert len(hog(img, 32)) == FEATURE_LENGTHS["hog32"] == 1386

    def test_constant_image_is_all_zero(self):
        fv = hog(solid_image(64, 64, (120, 33, 7)), 16)
        assert (fv.values == 0.0).all()

    def test_vertical_step_edge_votes_horizontal_bin(self):
        # black | white edge at x=32: gradient is purely horizontal, which is
        # orientation 0 and therefore bin 0 exactly; only cells touching the
        # edge columns (31, 32, 33 -> cells 1 and 2) may be nonzero
        img = np.zeros((64, 64, 3), dtype=np.uint8)
        img[:, 32:] = 255
        cells = hog_cell_histograms(grayscale(img), 16)
        nonzero_cells = {
            (r, c) for r in range(4) for c in range(4) if cells[r, c].any()
        }
        assert nonzero_cells == {(r, c) for r in range(4) for c in (1, 2)}
        for r, c in nonzero_cells:
            assert cells[r, c, 0] > 0
            assert (cells[r, c, 1:] == 0.0).all()

    def test_cell_histograms_match_bruteforce_exactly(self, rng):
        for _ in range(10):
            w = int(rng.integers(16, 50))
            h = int(rng.integers(16, 50))
            img = random_image(rng, w, h)
            np.testing.assert_array_equal(
                hog_cell_histograms(grayscale(img), 16),
                oracles.hog_cell_histograms(img, 16),
            )

    def test_full_descriptor_matches_bruteforce(self, rng):
        for _ in range(5):
            img = random_image(rng, 48, 48)
            np.testing.assert_allclose(
                hog(img, 16).values,
                oracles.hog_normalized(img, 16).ravel(),
                rtol=1e-12,
                atol=1e-15,
            )

    def test_invariant_to_constant_intensity_shift(self, rng):
        base = rng.integers(0, 180, size=(48, 48, 3), dtype=np.uint8)
        shifted = (base.astype(np.int32) + 60).astype(np.uint8)
        np.testing.assert_allclose(
            hog(base, 16).values, hog(shifted, 16).values, atol=1e-9
        )

    def test_deterministic(self, rng):
        img = random_image(rng, 64, 96)
        np.testing.assert_array_equal(hog(img, 32).values, hog(img, 32).values)


class TestLbp:
    def test_uniform_table_shape(self):
        assert LBP_UNIFORM_TABLE.shape == (256,)
        assert (LBP_UNIFORM_TABLE == 58).sum() == 256 - 58
        # constant neighborhoods (all bits set / none set) are uniform
        assert LBP_UNIFORM_TABLE[0] != 58
        assert LBP_UNIFORM_TABLE[255] != 58

    def test_constant_image_single_bin(self):
        fv = lbp(solid_image(32, 32, (100, 100, 100)))
        full_bin = LBP_UNIFORM_TABLE[255]  # every neighbor >= center
        per_cell = fv.values.reshape(-1, 59)
        assert (per_cell[:, full_bin] == 1.0).all()
        other = np.delete(per_cell, full_bin, axis=1)
        assert (other == 0.0).all()

    def test_bright_pixel_codes_match_bruteforce(self, rng):
        img = np.full((5, 5, 3), 10, dtype=np.uint8)
        img[2, 2] = 250
        np.testing.assert_array_equal(lbp_codes(grayscale(img)), oracles.lbp_codes(img))

    def test_codes_match_bruteforce_exactly(self, rng):
        for _ in range(20):
            w = int(rng.integers(3, 40))
            h = int(rng.integers(3, 40))
            img = random_image(rng, w, h)
            np.testing.assert_array_equal(lbp_codes(grayscale(img)), oracles.lbp_codes(img))

    def test_histogram_matches_bruteforce_exactly(self, rng):
        for _ in range(5):
            img = random_image(rng, 40, 36)
            np.testing.assert_array_equal(lbp(img).values, oracles.lbp_histogram(img))

    def test_length_on_canonical_window(self, rng):
        assert len(lbp(window_image(rng))) == FEATURE_LENGTHS["lbp"] == 36344

    def test_invariant_to_monotone_gray_remapping(self, rng):
        # gray image over a small palette; remap the palette with another
        # strictly increasing one
        levels = np.array([15, 60, 110, 170, 230], dtype=np.uint8)
        remapped = np.array([2, 90, 95, 200, 255], dtype=np.uint8)
        idx = rng.integers(0, len(levels), size=(40, 40))
        img_a = np.repeat(levels[idx][:, :, None], 3, axis=2)
        img_b = np.repeat(remapped[idx][:, :, None], 3, axis=2)
        np.testing.assert_array_equal(lbp(img_a).values, lbp(img_b).values)


def test_compute_feature_dispatch(rng):
    img = random_image(rng, 32, 32)
    assert compute_feature("color_hist", img).feature_name == "color_hist"
    assert compute_feature("hog32", img).feature_name == "hog32"
    with pytest.raises(InvalidParam):
        compute_feature("gist", img)


def test_histogram_features_nonnegative_and_finite(rng):
    img = window_image(rng)
    for name in FEATURE_LENGTHS:
        values = compute_feature(name, img).values
        assert np.isfinite(values).all()
        assert (values >= 0).all()
        assert len(values) == FEATURE_LENGTHS[name]
