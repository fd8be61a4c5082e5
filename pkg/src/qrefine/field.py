"""Pixel-resolution fields derived from the patch quality map.

The n-by-n map is flattened to image resolution with Keys cubic-convolution
interpolation (a = -0.5): each output pixel is a 16-tap weighted sum over
the 4x4 surrounding grid nodes. A hard patch grid would put block edges in
the masks and weight maps; the smooth flattened map avoids that. Both the
stage-1 noise weight map and the stage-2 inpainting mask derive from the
same flattened field.

Grid geometry: node (i, j) sits at continuous position
``((i + 0.5) * h / n, (j + 0.5) * w / n)`` and output pixel x spans
``[x, x + 1)`` with its center at ``x + 0.5`` (center-aligned resampling).
Nodes outside ``[0, n - 1]`` clamp to the border.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .imaging import as_pixel_map, decode_gray_png, encode_gray_png

KEYS_A = -0.5


def keys_weight(t):
    """Keys cubic-convolution kernel with a = -0.5.

    Interpolating (``Cub(0) = 1``, ``Cub(+-1) = Cub(+-2) = 0``) and a
    partition of unity over any four consecutive integer offsets.
    """
    t = np.abs(np.asarray(t, dtype=np.float64))
    a = KEYS_A
    near = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    far = a * (t**3 - 5.0 * t**2 + 8.0 * t - 4.0)
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _axis_weights(out_size: int, n: int) -> np.ndarray:
    """Dense (out_size, n) matrix of per-pixel Keys tap weights for one axis."""
    g = (np.arange(out_size, dtype=np.float64) + 0.5) * n / out_size - 0.5
    i0 = np.floor(g).astype(np.int64)
    f = g - i0
    weights = np.zeros((out_size, n), dtype=np.float64)
    rows = np.arange(out_size)
    for r in (-1, 0, 1, 2):
        idx = np.clip(i0 + r, 0, n - 1)
        np.add.at(weights, (rows, idx), keys_weight(f - r))
    return weights


def flatten_bicubic(quality_map: np.ndarray, h: int, w: int) -> np.ndarray:
    """Interpolate an n-by-n map to an (h, w) pixel map, clamped to [0, 1].

    The kernel can overshoot on steep data, hence the final clamp; away
    from the clamp the result is the exact 16-tap separable Keys sum.
    """
    quality_map = np.asarray(quality_map, dtype=np.float64)
    if quality_map.ndim != 2:
        raise ValueError(f"quality map must be 2-D, got shape {quality_map.shape}")
    n_rows, n_cols = quality_map.shape
    if h < n_rows or w < n_cols:
        raise ValueError(f"target {h}x{w} smaller than map {n_rows}x{n_cols}")
    row_w = _axis_weights(h, n_rows)
    col_w = _axis_weights(w, n_cols)
    flat = row_w @ quality_map @ col_w.T
    return np.clip(flat, 0.0, 1.0).astype(np.float32)


def noise_weight(flattened: np.ndarray, b_lq: float) -> np.ndarray:
    """Stage-1 noise weight map: ``max(b_lq - q, 0)`` pixelwise.

    Lower quality gets a higher weight; pixels at or above the low-quality
    bound get zero weight, so the map's values lie in [0, b_lq].
    """
    if not 0.0 < b_lq < 1.0:
        raise ConfigError(f"b_lq must be in (0, 1), got {b_lq}")
    flattened = as_pixel_map(flattened)
    return np.maximum(b_lq - flattened, 0.0).astype(np.float32)


def make_mask(flattened: np.ndarray, b_mq: float) -> np.ndarray:
    """Binary inpainting mask: True where quality is strictly below ``b_mq``.

    Equality counts as not-defective, so an all-threshold field yields an
    empty mask.
    """
    if not 0.0 < b_mq < 1.0:
        raise ConfigError(f"b_mq must be in (0, 1), got {b_mq}")
    flattened = as_pixel_map(flattened)
    return flattened < b_mq


def mask_fraction(mask: np.ndarray) -> float:
    """Fraction of pixels marked for modification."""
    mask = np.asarray(mask, dtype=bool)
    return float(mask.mean())


def mask_to_png(mask: np.ndarray) -> bytes:
    """Serialize a mask as 8-bit grayscale PNG: 255 = modify, 0 = preserve.

    This exact convention is part of the backend wire protocol.
    """
    return encode_gray_png(np.asarray(mask, dtype=bool).astype(np.float32))


def mask_from_png(data: bytes) -> np.ndarray:
    """Parse a wire-format mask PNG back to a boolean array."""
    return decode_gray_png(data) >= 0.5
