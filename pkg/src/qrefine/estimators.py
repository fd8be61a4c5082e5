"""Scikit-learn style estimators wrapping the scorer and the pipeline.

Both classes follow the sklearn conventions (constructor stores parameters
verbatim, ``get_params``/``set_params`` via ``BaseEstimator``, stateless
``fit`` returning ``self``), so they compose with ``sklearn.pipeline`` and
``sklearn.base.clone``. ``X`` may be a single ``(H, W, 3)`` image, an
``(N, H, W, 3)`` stack, or a list of images.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .backends.base import Enhancer
from .backends.builtin import BuiltinBackend
from .backends.remote import BackendEndpoint, RemoteBackend
from .iqa import DefaultScorer, ScorerConfig, global_quality
from .stages import DEFAULT_POSITIVE_WORDS, RefineConfig, run_pipeline


def _iter_images(X):
    arr = np.asarray(X, dtype=np.float32) if not isinstance(X, list) else X
    if isinstance(arr, np.ndarray) and arr.ndim == 3:
        return [arr], True
    if isinstance(arr, np.ndarray) and arr.ndim == 4:
        return list(arr), False
    if isinstance(X, list):
        return [np.asarray(im, dtype=np.float32) for im in X], False
    raise ValueError("X must be an image, a stack of images, or a list of images")


class PatchQualityScorer(BaseEstimator, TransformerMixin):
    """Transform images into patch quality maps.

    ``transform`` returns one ``(n, n)`` map per image; ``score_global``
    collapses each map to its mean.
    """

    def __init__(self, n=8, cells_per_patch_side=2, tau_s=2e-3, tau_n=2e-2):
        self.n = n
        self.cells_per_patch_side = cells_per_patch_side
        self.tau_s = tau_s
        self.tau_n = tau_n

    def _scorer(self) -> DefaultScorer:
        return DefaultScorer(
            ScorerConfig(
                n=self.n,
                cells_per_patch_side=self.cells_per_patch_side,
                tau_s=self.tau_s,
                tau_n=self.tau_n,
            )
        )

    def fit(self, X=None, y=None):
        self._scorer()  # validates parameters
        return self

    def transform(self, X):
        scorer = self._scorer()
        images, single = _iter_images(X)
        maps = [scorer.score_map(im) for im in images]
        return maps[0] if single else np.stack(maps)

    def score_global(self, X):
        maps = self.transform(X)
        if isinstance(maps, np.ndarray) and maps.ndim == 2:
            return global_quality(maps)
        return np.array([global_quality(m) for m in maps])


class QualityRefiner(BaseEstimator, TransformerMixin):
    """Transform images through the staged refining pipeline.

    ``backend`` may be ``"builtin"``, a backend URL, or any ``Enhancer``
    instance. ``transform`` returns refined images; ``refine`` additionally
    returns the stage report for one image.
    """

    def __init__(
        self,
        b_lq=0.35,
        b_mq=0.60,
        b_hq=0.75,
        noise_mu=0.5,
        noise_sigma=0.25,
        inpaint_strength=0.75,
        enhance_strength=0.30,
        steps=30,
        seed=0,
        stages=(1, 2, 3),
        min_mask_fraction=0.005,
        positive_words=DEFAULT_POSITIVE_WORDS,
        scorer_n=8,
        cells_per_patch_side=2,
        tau_s=2e-3,
        tau_n=2e-2,
        prompt="",
        backend="builtin",
    ):
        self.b_lq = b_lq
        self.b_mq = b_mq
        self.b_hq = b_hq
        self.noise_mu = noise_mu
        self.noise_sigma = noise_sigma
        self.inpaint_strength = inpaint_strength
        self.enhance_strength = enhance_strength
        self.steps = steps
        self.seed = seed
        self.stages = stages
        self.min_mask_fraction = min_mask_fraction
        self.positive_words = positive_words
        self.scorer_n = scorer_n
        self.cells_per_patch_side = cells_per_patch_side
        self.tau_s = tau_s
        self.tau_n = tau_n
        self.prompt = prompt
        self.backend = backend

    def _config(self) -> RefineConfig:
        return RefineConfig(
            b_lq=self.b_lq,
            b_mq=self.b_mq,
            b_hq=self.b_hq,
            noise_mu=self.noise_mu,
            noise_sigma=self.noise_sigma,
            inpaint_strength=self.inpaint_strength,
            enhance_strength=self.enhance_strength,
            steps=self.steps,
            seed=self.seed,
            stages_enabled=frozenset(self.stages),
            min_mask_fraction=self.min_mask_fraction,
            positive_words=tuple(self.positive_words),
            scorer=ScorerConfig(
                n=self.scorer_n,
                cells_per_patch_side=self.cells_per_patch_side,
                tau_s=self.tau_s,
                tau_n=self.tau_n,
            ),
        )

    def _backend(self) -> Enhancer:
        if isinstance(self.backend, Enhancer):
            return self.backend
        if self.backend == "builtin":
            return BuiltinBackend()
        backend = RemoteBackend(BackendEndpoint(base_url=str(self.backend)))
        backend.check()
        return backend

    def fit(self, X=None, y=None):
        self._config()  # validates parameters
        return self

    def transform(self, X):
        cfg = self._config()
        backend = self._backend()
        images, single = _iter_images(X)
        refined = [run_pipeline(im, self.prompt, cfg, backend)[0] for im in images]
        return refined[0] if single else np.stack(refined)

    def refine(self, img, prompt=None):
        cfg = self._config()
        return run_pipeline(
            img, self.prompt if prompt is None else prompt, cfg, self._backend()
        )
