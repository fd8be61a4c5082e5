"""Codec, colorimetry, and blend tests with round-trip oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrefine.errors import ImageDecodeError, ImageSizeError, ShapeMismatchError
from qrefine.imaging import (
    blend,
    decode_gray_png,
    decode_image,
    encode_gray_png,
    encode_png,
    png_dimensions,
    quantize_u8,
    to_luma,
)

from conftest import make_png


class TestDecode:
    def test_single_red_pixel_maps_to_unit_range(self):
        png = make_png(np.array([[[255, 0, 0]]], dtype=np.uint8))
        img = decode_image(png, min_size=1)
        np.testing.assert_array_equal(img[0, 0], [1.0, 0.0, 0.0])

    def test_gray_replicated_to_three_channels(self):
        png = make_png(np.full((2, 2), 128, dtype=np.uint8), mode="L")
        img = decode_image(png, min_size=1)
        assert img.shape == (2, 2, 3)
        np.testing.assert_allclose(img, 128 / 255, atol=1e-7)

    def test_alpha_discarded(self):
        rgba = np.zeros((8, 8, 4), dtype=np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 7
        img = decode_image(make_png(rgba, mode="RGBA"))
        assert img.shape == (8, 8, 3)
        np.testing.assert_allclose(img[..., 0], 200 / 255, atol=1e-7)

    def test_small_image_rejected_by_default(self):
        png = make_png(np.zeros((4, 4, 3), dtype=np.uint8))
        with pytest.raises(ImageSizeError):
            decode_image(png)

    def test_malformed_stream_rejected(self):
        with pytest.raises(ImageDecodeError):
            decode_image(b"not a png at all")

    def test_truncated_png_rejected(self):
        png = make_png(np.zeros((16, 16, 3), dtype=np.uint8))
        with pytest.raises(ImageDecodeError):
            decode_image(png[:40])

    def test_decode_encode_decode_bit_identical(self, rng):
        # round-trip oracle over a fixed corpus of random images
        for h, w in [(64, 64), (33, 47), (8, 128)]:
            src = make_png(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
            first = decode_image(src)
            second = decode_image(encode_png(first))
            np.testing.assert_array_equal(first, second)

    def test_jpeg_decodes(self, rng):
        import io

        from PIL import Image

        buf = io.BytesIO()
        raw = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        Image.fromarray(raw, mode="RGB").save(buf, format="JPEG", quality=95)
        img = decode_image(buf.getvalue())
        assert img.shape == (32, 32, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_unsupported_format_rejected(self, rng):
        import io

        from PIL import Image

        buf = io.BytesIO()
        raw = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        Image.fromarray(raw, mode="RGB").save(buf, format="BMP")
        with pytest.raises(ImageDecodeError):
            decode_image(buf.getvalue())


class TestEncode:
    def test_zero_buffer_encodes_to_zeros(self):
        img = np.zeros((8, 8, 3), dtype=np.float32)
        decoded = decode_image(encode_png(img))
        np.testing.assert_array_equal(decoded, img)

    def test_half_rounds_away_from_zero(self):
        # 0.5 * 255 = 127.5 must store as 128
        assert quantize_u8(np.array([0.5]))[0] == 128

    def test_quantization_tie_table(self):
        values = np.array([0.0, 1 / 510, 0.25, 0.5, 0.75, 1.0])
        expected = [0, 1, 64, 128, 191, 255]
        np.testing.assert_array_equal(quantize_u8(values), expected)

    def test_round_trip_error_within_half_step(self, rng):
        img = rng.random((32, 32, 3)).astype(np.float32)
        recovered = decode_image(encode_png(img))
        assert np.abs(recovered - img).max() <= 1 / 510 + 1e-7

    def test_gray_round_trip(self, rng):
        pm = rng.random((16, 16)).astype(np.float32)
        recovered = decode_gray_png(encode_gray_png(pm))
        assert np.abs(recovered - pm).max() <= 1 / 510 + 1e-7

    def test_png_dimensions_header_probe(self):
        png = make_png(np.zeros((13, 37, 3), dtype=np.uint8))
        assert png_dimensions(png) == (13, 37)
        with pytest.raises(ImageDecodeError):
            png_dimensions(b"garbage")


class TestLuma:
    def test_white_is_unity(self):
        img = np.ones((4, 4, 3), dtype=np.float32)
        np.testing.assert_allclose(to_luma(img), 1.0, atol=1e-6)

    def test_pure_red_coefficient(self):
        img = np.zeros((2, 2, 3), dtype=np.float32)
        img[..., 0] = 1.0
        np.testing.assert_allclose(to_luma(img), 0.299, atol=1e-6)

    def test_matches_scalar_weighted_sum(self, rng):
        img = rng.random((5, 7, 3)).astype(np.float32)
        luma = to_luma(img)
        for y in range(5):
            for x in range(7):
                r, g, b = (float(v) for v in img[y, x])
                expected = 0.299 * r + 0.587 * g + 0.114 * b
                assert abs(float(luma[y, x]) - expected) < 1e-6

    def test_output_stays_in_unit_interval(self, rng):
        img = rng.random((16, 16, 3)).astype(np.float32)
        luma = to_luma(img)
        assert luma.min() >= 0.0 and luma.max() <= 1.0


class TestBlend:
    def test_zero_weight_is_bitwise_identity(self, rng):
        base = rng.random((6, 6, 3)).astype(np.float32)
        overlay = rng.random((6, 6, 3)).astype(np.float32)
        out = blend(base, overlay, np.zeros((6, 6), dtype=np.float32))
        np.testing.assert_array_equal(out, base)

    def test_unit_weight_returns_overlay(self, rng):
        base = rng.random((6, 6, 3)).astype(np.float32)
        overlay = rng.random((6, 6, 3)).astype(np.float32)
        out = blend(base, overlay, np.ones((6, 6), dtype=np.float32))
        np.testing.assert_array_equal(out, overlay)

    def test_convex_combination_at_single_pixel(self):
        base = np.zeros((4, 4, 3), dtype=np.float32)
        overlay = np.ones((4, 4, 3), dtype=np.float32)
        weight = np.zeros((4, 4), dtype=np.float32)
        weight[1, 2] = 0.3
        out = blend(base, overlay, weight)
        np.testing.assert_allclose(out[1, 2], 0.3, atol=1e-7)
        assert out[0, 0, 0] == 0.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ShapeMismatchError):
            blend(
                np.zeros((4, 4, 3), dtype=np.float32),
                np.zeros((5, 4, 3), dtype=np.float32),
                np.zeros((4, 4), dtype=np.float32),
            )

    def test_weight_outside_unit_interval_rejected(self):
        img = np.zeros((4, 4, 3), dtype=np.float32)
        with pytest.raises(ValueError):
            blend(img, img, np.full((4, 4), 1.5, dtype=np.float32))

    @settings(deadline=None, max_examples=30)
    @given(w1=st.floats(0, 1), w2=st.floats(0, 1))
    def test_pixelwise_monotone_toward_overlay(self, w1, w2):
        # raising the weight at a pixel moves that pixel toward the overlay
        # and touches nothing else
        lo, hi = sorted((w1, w2))
        base = np.full((3, 3, 3), 0.2, dtype=np.float32)
        overlay = np.full((3, 3, 3), 0.9, dtype=np.float32)
        weight = np.zeros((3, 3), dtype=np.float32)
        weight[1, 1] = lo
        out_lo = blend(base, overlay, weight)
        weight[1, 1] = hi
        out_hi = blend(base, overlay, weight)
        assert out_hi[1, 1, 0] >= out_lo[1, 1, 0]
        np.testing.assert_array_equal(out_hi[0, 0], out_lo[0, 0])
