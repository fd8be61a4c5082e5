"""Backend surface that the refining stages call into.

In-process classical backends and remote generative services implement the
same two methods and raise the same error taxonomy, so the orchestrator is
indifferent to where the work happens.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

CAP_INPAINT = "inpaint"
CAP_BLIND = "blind"
CAP_PROMPT_GUIDED = "prompt_guided"


class Enhancer(ABC):
    """A generative or classical image backend.

    Implementations must be deterministic given ``(input, parameters,
    seed)`` and expose an identity label plus capability flags. Strength 0
    must return the input unchanged (zero-strength identity), which anchors
    the determinism tests for every conforming backend.
    """

    name: str = "enhancer"
    capabilities: frozenset = frozenset()

    @abstractmethod
    def inpaint(
        self,
        img: np.ndarray,
        mask: np.ndarray,
        prompt: str,
        *,
        strength: float,
        steps: int,
        seed: int,
    ) -> np.ndarray:
        """Regenerate the masked region; pixels with mask=False are preserved."""

    @abstractmethod
    def enhance(
        self,
        img: np.ndarray,
        prompt: str,
        *,
        strength: float,
        steps: int,
        seed: int,
    ) -> np.ndarray:
        """Globally refine the image, scaled by ``strength`` (0 = echo)."""

    def supports(self, capability: str) -> bool:
        return capability in self.capabilities
