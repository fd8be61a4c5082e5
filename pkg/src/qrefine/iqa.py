"""Patch quality assessment: an n-by-n quality map plus a global score.

The map comes from a pluggable scorer. The default scorer is classical and
fully closed-form: each cell of a finer sub-grid gets a sharpness term from
the variance of its Laplacian response and a noise penalty from the
Immerkaer fast noise estimate, and patch scores are the max over the cells
they contain. The global score is the plain mean of the patch scores.

Any scorer plugged in here must return values in [0, 1], be deterministic
for a fixed input, and be pure. The default scorer is stateless and safe
for shared concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import ConfigError, ImageSizeError, ShapeMismatchError
from .imaging import as_image, as_pixel_map, encode_gray_png, to_luma

# 3x3 Laplacian used for the sharpness term
LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

# Laplacian-difference mask of the Immerkaer noise estimator
IMMERKAER_KERNEL = np.array([[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]])


@dataclass(frozen=True)
class ScorerConfig:
    """Free parameters of the default scorer.

    Attributes
    ----------
    n : patches per side of the quality map.
    cells_per_patch_side : sub-cell subdivision inside each patch; the
        scoring grid is ``n * cells_per_patch_side`` cells per side.
    tau_s : half-saturation constant for the Laplacian-variance sharpness
        term. At ``Var = tau_s`` the sharpness term is 0.5.
    tau_n : half-saturation constant for the noise penalty.
    """

    n: int = 8
    cells_per_patch_side: int = 2
    tau_s: float = 2e-3
    tau_n: float = 2e-2

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.cells_per_patch_side < 1:
            raise ConfigError("cells_per_patch_side must be >= 1")
        if self.tau_s <= 0 or self.tau_n <= 0:
            raise ConfigError("tau_s and tau_n must be strictly positive")

    @property
    def cells_per_side(self) -> int:
        return self.n * self.cells_per_patch_side


@runtime_checkable
class QualityScorer(Protocol):
    """Plug-in contract for quality scorers.

    Implementations must be pure and deterministic, return an ``(n, n)``
    array of scores in [0, 1], and either be safe for shared concurrent
    use or cheaply clonable per worker (document which).
    """

    n: int

    def score_map(self, img: np.ndarray) -> np.ndarray: ...


def split_patches(h: int, w: int, n: int) -> list[tuple[int, int, int, int]]:
    """Tile an h-by-w image into n*n patches by the floor-partition rule.

    Patch (i, j) covers rows ``[floor(i*h/n), floor((i+1)*h/n))`` and the
    analogous columns; the patches cover every pixel exactly once. Returned
    in row-major order as ``(row0, row1, col0, col1)`` half-open bounds.
    """
    if n > min(h, w):
        raise ImageSizeError(f"cannot split {h}x{w} into {n}x{n} patches")
    rects = []
    for i in range(n):
        r0, r1 = i * h // n, (i + 1) * h // n
        for j in range(n):
            c0, c1 = j * w // n, (j + 1) * w // n
            rects.append((r0, r1, c0, c1))
    return rects


def _conv3_valid(pm: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 valid-mode convolution via shifted-slice accumulation."""
    h, w = pm.shape
    out = np.zeros((h - 2, w - 2), dtype=np.float64)
    for di in range(3):
        for dj in range(3):
            out += kernel[di, dj] * pm[di : h - 2 + di, dj : w - 2 + dj]
    return out


def immerkaer_sigma(luma: np.ndarray) -> float:
    """Fast noise standard-deviation estimate from the 3x3 Laplacian-difference mask."""
    luma = as_pixel_map(luma)
    h, w = luma.shape
    if h < 3 or w < 3:
        raise ImageSizeError(f"noise estimate needs at least 3x3, got {h}x{w}")
    response = _conv3_valid(luma.astype(np.float64), IMMERKAER_KERNEL)
    total = np.abs(response).sum()
    return float(np.sqrt(np.pi / 2.0) * total / (6.0 * (w - 2) * (h - 2)))


def cell_score(luma_cell: np.ndarray, tau_s: float = 2e-3, tau_n: float = 2e-2) -> float:
    """Score one luma cell in [0, 1]: sharpness damped by estimated noise.

    ``score = s * (1 - p)`` where ``s = Var(lap) / (Var(lap) + tau_s)`` from
    the 3x3 Laplacian response over the cell interior, and
    ``p = sigma_n / (sigma_n + tau_n)`` from the Immerkaer noise estimate.
    A constant cell scores 0; heavy noise drives the score toward 0 as well.
    """
    luma_cell = as_pixel_map(luma_cell)
    h, w = luma_cell.shape
    if h < 3 or w < 3:
        raise ImageSizeError(f"cell must be at least 3x3, got {h}x{w}")
    lap = _conv3_valid(luma_cell.astype(np.float64), LAPLACIAN_KERNEL)
    var = float(lap.var())
    s = var / (var + tau_s)
    sigma_n = immerkaer_sigma(luma_cell)
    p = sigma_n / (sigma_n + tau_n)
    return float(np.clip(s * (1.0 - p), 0.0, 1.0))


def score_cells(img: np.ndarray, cfg: ScorerConfig = ScorerConfig()) -> np.ndarray:
    """Score every cell of the m-by-m sub-grid, m = n * cells_per_patch_side.

    Cells partition the image by the same floor rule as patches. Every cell
    must be at least 3x3 pixels.
    """
    img = as_image(img)
    luma = to_luma(img)
    m = cfg.cells_per_side
    h, w = luma.shape
    if h // m < 3 or w // m < 3:
        raise ImageSizeError(
            f"{h}x{w} image gives cells below 3x3 at {m} cells per side"
        )
    grid = np.zeros((m, m), dtype=np.float32)
    for idx, (r0, r1, c0, c1) in enumerate(split_patches(h, w, m)):
        grid[idx // m, idx % m] = cell_score(luma[r0:r1, c0:c1], cfg.tau_s, cfg.tau_n)
    return grid


def pool_patches(cells: np.ndarray, cells_per_patch_side: int = 2) -> np.ndarray:
    """Max-pool the cell grid down to the patch quality map.

    An ``(m, m)`` cell grid with ``c = cells_per_patch_side`` becomes an
    ``(m/c, m/c)`` map where each patch takes the largest of its cells.
    """
    cells = np.asarray(cells, dtype=np.float32)
    c = cells_per_patch_side
    if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
        raise ShapeMismatchError(f"cell grid must be square, got {cells.shape}")
    if c < 1 or cells.shape[0] % c != 0:
        raise ShapeMismatchError(
            f"grid side {cells.shape[0]} not divisible by {c} cells per patch"
        )
    n = cells.shape[0] // c
    return cells.reshape(n, c, n, c).max(axis=(1, 3))


def global_quality(quality_map: np.ndarray) -> float:
    """Arithmetic mean of all patch scores."""
    quality_map = np.asarray(quality_map, dtype=np.float64)
    return float(quality_map.mean())


class DefaultScorer:
    """The built-in classical scorer; implements the ``QualityScorer`` contract.

    Stateless and therefore safe for shared concurrent use.
    """

    def __init__(self, cfg: ScorerConfig = ScorerConfig()):
        self.cfg = cfg
        self.n = cfg.n

    def score_map(self, img: np.ndarray) -> np.ndarray:
        return pool_patches(score_cells(img, self.cfg), self.cfg.cells_per_patch_side)

    def global_score(self, img: np.ndarray) -> float:
        return global_quality(self.score_map(img))


def map_to_text(quality_map: np.ndarray) -> str:
    """Serialize a quality map as one row per line, space-separated decimals."""
    quality_map = np.asarray(quality_map, dtype=np.float64)
    lines = [" ".join(f"{v:.6f}" for v in row) for row in quality_map]
    return "\n".join(lines) + "\n"


def map_from_text(text: str) -> np.ndarray:
    """Parse the plain-text grid format back into a float map."""
    rows = [
        [float(tok) for tok in line.split()]
        for line in text.splitlines()
        if line.strip()
    ]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("malformed quality-map grid")
    return np.asarray(rows, dtype=np.float32)


def map_to_heatmap_png(quality_map: np.ndarray) -> bytes:
    """Render a [0, 1] map as an 8-bit grayscale PNG (255 = quality 1)."""
    return encode_gray_png(np.asarray(quality_map, dtype=np.float32))
