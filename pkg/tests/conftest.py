"""Shared fixtures and stub backends for the test suite."""

import io

import numpy as np
import pytest
from PIL import Image

from qrefine.backends.base import Enhancer
from qrefine.corpus import build_corpus


def make_png(array_u8, mode="RGB"):
    """Encode a uint8 array as PNG bytes via Pillow (test-side path)."""
    buf = io.BytesIO()
    Image.fromarray(array_u8, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


class CountingBackend(Enhancer):
    """Echo backend that counts calls; used to assert skip rules."""

    name = "counting-stub"
    capabilities = frozenset({"inpaint", "blind", "prompt_guided"})

    def __init__(self):
        self.inpaint_calls = 0
        self.enhance_calls = 0

    def inpaint(self, img, mask, prompt, *, strength, steps, seed):
        self.inpaint_calls += 1
        return img

    def enhance(self, img, prompt, *, strength, steps, seed):
        self.enhance_calls += 1
        return img


class TaggingEnhancer(Enhancer):
    """Stamps a marker value into one pixel so tests can see who ran."""

    capabilities = frozenset({"inpaint", "blind", "prompt_guided"})

    def __init__(self, name, marker):
        self.name = name
        self.marker = np.float32(marker)
        self.prompts = []

    def inpaint(self, img, mask, prompt, *, strength, steps, seed):
        return img

    def enhance(self, img, prompt, *, strength, steps, seed):
        self.prompts.append(prompt)
        out = img.copy()
        out[0, 0, 0] = self.marker
        return out


class ConstantScorer:
    """Scorer stub returning a fixed quality map."""

    def __init__(self, quality_map):
        self.quality_map = np.asarray(quality_map, dtype=np.float32)
        self.n = self.quality_map.shape[0]

    def score_map(self, img):
        return self.quality_map


@pytest.fixture(scope="session")
def small_corpus():
    """Four degraded 128x128 mosaics; enough for fast integration tests."""
    return build_corpus(count=4, size=128, seed=99)


@pytest.fixture(scope="session")
def full_corpus():
    """The 16-image 256x256 corpus used by the acceptance suite."""
    return build_corpus(count=16, size=256, seed=1234)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
