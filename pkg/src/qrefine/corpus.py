"""Synthetic corpus: clean test images plus controlled regional degradation.

The clean generator produces mosaic images (recursive axis-aligned splits,
flat random fills, a few accent shapes). That construction is deliberate:
the boundaries give every neighborhood real structure for the scorer to
measure, while the flat fills keep the noise estimate near zero, which is
what a clean photographic source looks like to the default scorer.

Degradation specs place rectangular regions (relative coordinates) and
apply Gaussian blur or additive noise inside them, emitting the ground
truth region mask alongside. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import CorpusSpecError
from .imaging import as_image

BLUR_SIGMA_RANGE = (1.0, 4.0)
NOISE_SIGMA_RANGE = (0.05, 0.2)


@dataclass(frozen=True)
class DegradeRegion:
    """One axis-aligned degradation region in relative [0, 1] coordinates."""

    top: float
    left: float
    height: float
    width: float
    op: str
    sigma: float

    def __post_init__(self):
        if self.op not in ("gaussian_blur", "additive_noise"):
            raise CorpusSpecError(f"unknown degradation op: {self.op!r}")
        if not (0.0 <= self.top and 0.0 <= self.left):
            raise CorpusSpecError("region origin must be non-negative")
        if self.height <= 0.0 or self.width <= 0.0:
            raise CorpusSpecError("region extent must be positive")
        if self.top + self.height > 1.0 or self.left + self.width > 1.0:
            raise CorpusSpecError("region exceeds image bounds")
        lo, hi = BLUR_SIGMA_RANGE if self.op == "gaussian_blur" else NOISE_SIGMA_RANGE
        if not lo <= self.sigma <= hi:
            raise CorpusSpecError(
                f"{self.op} sigma {self.sigma} outside [{lo}, {hi}]"
            )

    def pixel_bounds(self, h: int, w: int) -> tuple[int, int, int, int]:
        r0 = int(self.top * h)
        c0 = int(self.left * w)
        r1 = max(int((self.top + self.height) * h), r0 + 1)
        c1 = max(int((self.left + self.width) * w), c0 + 1)
        return r0, min(r1, h), c0, min(c1, w)


@dataclass(frozen=True)
class DegradeSpec:
    """A seed plus the regions to degrade; at least one clean region must remain."""

    seed: int
    regions: tuple

    def __post_init__(self):
        regions = tuple(
            r if isinstance(r, DegradeRegion) else DegradeRegion(**r)
            for r in self.regions
        )
        if not regions:
            raise CorpusSpecError("spec must contain at least one region")
        object.__setattr__(self, "regions", regions)

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "regions": [
                    {
                        "top": r.top,
                        "left": r.left,
                        "height": r.height,
                        "width": r.width,
                        "op": r.op,
                        "sigma": r.sigma,
                    }
                    for r in self.regions
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DegradeSpec":
        try:
            obj = json.loads(text)
            return cls(seed=int(obj["seed"]), regions=tuple(obj["regions"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusSpecError(f"malformed degradation spec: {exc}") from exc


def make_clean_image(seed: int, h: int = 256, w: int = 256) -> np.ndarray:
    """Generate a deterministic mosaic test image with crisp structure."""
    rng = np.random.default_rng(seed)
    img = np.zeros((h, w, 3), dtype=np.float32)

    # recursive axis-aligned splits down to fine leaves; dense boundaries
    # keep nearly every scoring cell on real structure
    stack = [(0, h, 0, w)]
    leaves = []
    min_side = max(min(h, w) // 26, 6)
    while stack:
        r0, r1, c0, c1 = stack.pop()
        rh, cw = r1 - r0, c1 - c0
        small = rh <= 2 * min_side and cw <= 2 * min_side
        if small or (max(rh, cw) <= 3 * min_side and rng.random() < 0.05):
            leaves.append((r0, r1, c0, c1))
            continue
        if rh >= cw:
            cut = r0 + int(rng.integers(min_side, rh - min_side + 1))
            stack.append((r0, cut, c0, c1))
            stack.append((cut, r1, c0, c1))
        else:
            cut = c0 + int(rng.integers(min_side, cw - min_side + 1))
            stack.append((r0, r1, c0, cut))
            stack.append((r0, r1, cut, c1))
    for r0, r1, c0, c1 in leaves:
        img[r0:r1, c0:c1] = rng.uniform(0.05, 0.95, size=3).astype(np.float32)

    # a few accent shapes so the content is not purely rectangular
    yy, xx = np.indices((h, w))
    for _ in range(4):
        cy, cx = rng.integers(0, h), rng.integers(0, w)
        radius = int(rng.integers(min_side, int(1.5 * min_side) + 1))
        color = rng.uniform(0.05, 0.95, size=3).astype(np.float32)
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
        img[disc] = color

    return np.clip(img, 0.0, 1.0)


def apply_degradations(img: np.ndarray, spec: DegradeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Degrade the regions of ``spec``; returns ``(degraded, truth_mask)``.

    Blur regions composite a Gaussian-blurred copy inside the region; noise
    regions add clipped Gaussian noise drawn from the spec seed. The truth
    mask marks every degraded pixel.
    """
    img = as_image(img)
    h, w = img.shape[:2]
    rng = np.random.default_rng(spec.seed)
    out = img.copy()
    truth = np.zeros((h, w), dtype=bool)
    for region in spec.regions:
        r0, r1, c0, c1 = region.pixel_bounds(h, w)
        patch = out[r0:r1, c0:c1]
        if region.op == "gaussian_blur":
            degraded = ndimage.gaussian_filter(
                patch, sigma=(region.sigma, region.sigma, 0.0), mode="nearest"
            )
        else:
            noise = rng.normal(0.0, region.sigma, size=patch.shape)
            degraded = patch + noise.astype(np.float32)
        out[r0:r1, c0:c1] = np.clip(degraded, 0.0, 1.0)
        truth[r0:r1, c0:c1] = True
    if truth.all():
        raise CorpusSpecError("regions cover the whole image; no clean region left")
    return out, truth


def random_degrade_spec(seed: int, n_regions: int = 3) -> DegradeSpec:
    """Draw a valid random spec: quadrant-anchored regions, mixed ops.

    At most one region per quadrant, so at least one quadrant always stays
    clean.
    """
    rng = np.random.default_rng(seed)
    regions = []
    anchors = [(0.03, 0.03), (0.53, 0.53), (0.03, 0.53), (0.53, 0.03)]
    order = rng.permutation(len(anchors))
    for k in range(min(n_regions, len(anchors) - 1)):
        top0, left0 = anchors[order[k]]
        top = top0 + float(rng.uniform(0.0, 0.03))
        left = left0 + float(rng.uniform(0.0, 0.03))
        height = float(rng.uniform(0.34, 0.44))
        width = float(rng.uniform(0.34, 0.44))
        if rng.random() < 0.5:
            op, sigma = "gaussian_blur", float(rng.uniform(2.0, 3.8))
        else:
            op, sigma = "additive_noise", float(rng.uniform(0.08, 0.18))
        regions.append(
            DegradeRegion(top=top, left=left, height=height, width=width, op=op, sigma=sigma)
        )
    return DegradeSpec(seed=seed, regions=tuple(regions))


@dataclass
class CorpusImage:
    """One corpus entry: id, clean source, degraded version, truth mask."""

    image_id: str
    clean: np.ndarray
    degraded: np.ndarray
    truth_mask: np.ndarray
    spec: DegradeSpec


def build_corpus(count: int = 16, size: int = 256, seed: int = 1234) -> list:
    """Deterministic in-memory corpus of degraded mosaics with ground truth."""
    corpus = []
    for k in range(count):
        clean = make_clean_image(seed + 101 * k, size, size)
        spec = random_degrade_spec(seed + 101 * k + 7)
        degraded, truth = apply_degradations(clean, spec)
        corpus.append(
            CorpusImage(
                image_id=f"img{k:03d}",
                clean=clean,
                degraded=degraded,
                truth_mask=truth,
                spec=spec,
            )
        )
    return corpus
