"""Classical image operators for the reference backend.

Self-contained on purpose: the server speaks to clients only over the wire
protocol, so it carries its own small harmonic solver and sharpening code
instead of importing the client package.
"""

from __future__ import annotations

import numpy as np

HARMONIC_TOL = 1e-4
HARMONIC_ITERS = 4000
HARMONIC_OMEGA = 1.9


def _mean4(x: np.ndarray) -> np.ndarray:
    """4-neighbor mean with replicated edges (channel-last arrays)."""
    p = np.pad(x, ((1, 1), (1, 1), (0, 0)), mode="edge")
    return 0.25 * (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:])


def harmonic_fill(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Solve the discrete Laplace equation over the masked pixels.

    Over-relaxed red-black sweeps from a flat initial guess (the mean of
    the unmasked pixels). Converges to the same fixed point as any other
    harmonic solver: each masked pixel ends up the mean of its neighbors.
    """
    if mask.all():
        raise ValueError("mask covers every pixel; nothing to anchor the fill")
    work = img.astype(np.float64).copy()
    boundary_mean = work[~mask].mean()
    work[mask] = boundary_mean

    yy, xx = np.indices(mask.shape)
    red = mask & ((yy + xx) % 2 == 0)
    black = mask & ((yy + xx) % 2 == 1)

    for it in range(HARMONIC_ITERS):
        for color in (red, black):
            m = _mean4(work)
            c3 = color[:, :, None]
            work = np.where(c3, work + HARMONIC_OMEGA * (m - work), work)
        if it % 8 == 7:
            residual = np.abs(_mean4(work) - work)[mask].max()
            if residual < HARMONIC_TOL:
                break
    out = img.astype(np.float64).copy()
    out[mask] = np.clip(work[mask], 0.0, 1.0)
    return out


def inpaint(img: np.ndarray, mask: np.ndarray, strength: float) -> np.ndarray:
    """Fill the mask harmonically, then blend in by ``strength``.

    Unmasked pixels are returned untouched, so their 8-bit round trip is
    byte-exact. Strength 0 is handled by the caller as a verbatim echo.
    """
    if not mask.any() or strength == 0.0:
        return img
    filled = harmonic_fill(img, mask)
    out = img.astype(np.float64).copy()
    out[mask] = img.astype(np.float64)[mask] + strength * (filled[mask] - img[mask])
    return np.clip(out, 0.0, 1.0)


def _gaussian_1d(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _blur(img: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian blur with replicated edges."""
    kernel = _gaussian_1d(sigma, radius)
    p = np.pad(img, ((radius, radius), (0, 0), (0, 0)), mode="edge")
    rows = sum(
        kernel[i] * p[i : i + img.shape[0]] for i in range(2 * radius + 1)
    )
    p = np.pad(rows, ((0, 0), (radius, radius), (0, 0)), mode="edge")
    return sum(kernel[i] * p[:, i : i + img.shape[1]] for i in range(2 * radius + 1))


def enhance(img: np.ndarray, strength: float) -> np.ndarray:
    """Mild denoise plus unsharp sharpening, scaled by ``strength``."""
    if strength == 0.0:
        return img
    work = img.astype(np.float64)
    denoised = _blur(work, sigma=0.7, radius=2)
    sharp = np.clip(denoised + 0.9 * (work - _blur(work, sigma=1.4, radius=4)), 0.0, 1.0)
    return np.clip(work + strength * (sharp - work), 0.0, 1.0)
