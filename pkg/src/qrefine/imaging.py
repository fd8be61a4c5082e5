"""Image representation, codecs, colorimetry, and pixelwise arithmetic.

The working representation throughout the package is a numpy array:

* image buffer -- ``(H, W, 3)`` float32, RGB, samples in [0, 1]
* pixel map    -- ``(H, W)`` float32, single channel

Single precision is deliberate: every threshold in the pipeline is a
unit-interval score and all sources are 8-bit, so float64 buys nothing.
All public operations clamp their output back into [0, 1].
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError, ImageSizeError, ShapeMismatchError

MIN_REFINABLE_SIZE = 8

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # Rec.601


def as_image(arr) -> np.ndarray:
    """Validate and convert ``arr`` to the (H, W, 3) float32 image layout."""
    img = np.asarray(arr, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeMismatchError(f"expected (H, W, 3) image, got shape {img.shape}")
    return np.ascontiguousarray(img)


def as_pixel_map(arr) -> np.ndarray:
    """Validate and convert ``arr`` to the (H, W) float32 pixel-map layout."""
    pm = np.asarray(arr, dtype=np.float32)
    if pm.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) pixel map, got shape {pm.shape}")
    return np.ascontiguousarray(pm)


def check_same_size(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ShapeMismatchError(f"size mismatch: {a.shape[:2]} vs {b.shape[:2]}")


def decode_image(data: bytes, *, min_size: int = MIN_REFINABLE_SIZE) -> np.ndarray:
    """Decode a PNG or JPEG byte stream into a float32 RGB buffer.

    8-bit samples map to [0, 1] via ``v / 255``. Grayscale inputs are
    replicated to three channels; alpha channels are discarded. Images
    smaller than ``min_size`` on either side are rejected (the pipeline
    cannot refine them); pass ``min_size=1`` to decode tiny images for
    inspection.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise ImageDecodeError(f"unsupported format: {im.format}")
            im = im.convert("RGB")
            raw = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image stream: {exc}") from exc
    h, w = raw.shape[:2]
    if h < min_size or w < min_size:
        raise ImageSizeError(f"image {h}x{w} is below the minimum {min_size}x{min_size}")
    return (raw.astype(np.float32)) / 255.0


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to uint8 with round-half-away-from-zero ties."""
    v = np.clip(values, 0.0, 1.0).astype(np.float64)
    # inputs are non-negative, so floor(x + 0.5) rounds ties away from zero
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def encode_png(img: np.ndarray) -> bytes:
    """Encode a float buffer as an 8-bit RGB PNG (non-interlaced)."""
    img = as_image(img)
    raw = quantize_u8(img)
    buf = io.BytesIO()
    Image.fromarray(raw, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray_png(pm: np.ndarray) -> bytes:
    """Encode a [0, 1] pixel map as an 8-bit grayscale PNG (0=0.0, 255=1.0)."""
    pm = as_pixel_map(pm)
    raw = quantize_u8(pm)
    buf = io.BytesIO()
    Image.fromarray(raw, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_gray_png(data: bytes) -> np.ndarray:
    """Decode an 8-bit grayscale PNG into a [0, 1] pixel map."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            raw = np.asarray(im.convert("L"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode grayscale stream: {exc}") from exc
    return raw.astype(np.float32) / 255.0


def png_dimensions(data: bytes) -> tuple[int, int]:
    """Read (height, width) from a PNG header without a full decode."""
    if len(data) < 24 or data[:8] != b"\x89PNG\r\n\x1a\n":
        raise ImageDecodeError("not a PNG stream")
    w = int.from_bytes(data[16:20], "big")
    h = int.from_bytes(data[20:24], "big")
    return h, w


def to_luma(img: np.ndarray) -> np.ndarray:
    """Per-pixel Rec.601 luma: 0.299 R + 0.587 G + 0.114 B."""
    img = as_image(img)
    r, g, b = LUMA_WEIGHTS
    luma = r * img[:, :, 0] + g * img[:, :, 1] + b * img[:, :, 2]
    return np.clip(luma, 0.0, 1.0).astype(np.float32)


def blend(base: np.ndarray, overlay: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Pixelwise convex combination of two images.

    ``out(x, y, c) = weight(x, y) * overlay(x, y, c)
                   + (1 - weight(x, y)) * base(x, y, c)``

    clamped to [0, 1]. A zero weight map returns ``base`` bit-identically.
    """
    base = as_image(base)
    overlay = as_image(overlay)
    weight = as_pixel_map(weight)
    check_same_size(base, overlay)
    check_same_size(base, weight)
    if weight.min() < 0.0 or weight.max() > 1.0:
        raise ValueError("blend weights must lie in [0, 1]")
    w = weight[:, :, None]
    out = w * overlay + (1.0 - w) * base
    return np.clip(out, 0.0, 1.0).astype(np.float32)
