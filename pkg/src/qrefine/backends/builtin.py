"""In-process classical backend: harmonic fill plus unsharp enhancement.

This backend keeps the whole pipeline runnable offline with no model
weights. Prompts are accepted for interface parity and ignored; the
``steps`` and ``seed`` parameters are likewise accepted but unused because
the classical algorithms are closed-form.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError
from ..imaging import as_image
from ..restore import builtin_blind_enhance, builtin_harmonic_inpaint, strength_blend
from .base import CAP_BLIND, CAP_INPAINT, CAP_PROMPT_GUIDED, Enhancer


class BuiltinBackend(Enhancer):
    """Classical stand-in for a generative service.

    ``inpaint`` solves the discrete harmonic fill over the mask and blends
    it in by ``strength``; unmasked pixels are preserved exactly.
    ``enhance`` applies the blind classical enhancer scaled by
    ``strength``. Deterministic, stateless, safe for concurrent use.
    """

    name = "builtin"
    capabilities = frozenset({CAP_INPAINT, CAP_BLIND, CAP_PROMPT_GUIDED})

    def __init__(self, inpaint_iters: int = 2000, inpaint_omega: float = 1.8):
        self.inpaint_iters = inpaint_iters
        self.inpaint_omega = inpaint_omega

    def inpaint(self, img, mask, prompt, *, strength, steps, seed):
        img = as_image(img)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != img.shape[:2]:
            raise ShapeMismatchError(f"mask {mask.shape} vs image {img.shape[:2]}")
        if strength == 0.0 or not mask.any():
            return img
        filled = builtin_harmonic_inpaint(
            img, mask, iters=self.inpaint_iters, omega=self.inpaint_omega
        )
        out = img.copy()
        out[mask] = strength_blend(img, filled, strength)[mask]
        return out

    def enhance(self, img, prompt, *, strength, steps, seed):
        img = as_image(img)
        if strength == 0.0:
            return img
        return strength_blend(img, builtin_blind_enhance(img), strength)
