"""The three refining stages and their orchestrator.

Stage 1 superimposes Gaussian noise on low-quality regions so later
generative steps can rework content that would otherwise be stuck. Stage 2
inpaints everything below the medium-quality bound through a backend,
preserving the high-quality rest. Stage 3 routes the whole image through
either a blind classical enhancer or a prompt-guided one depending on the
global quality, with quality-boosting words appended to the prompt on the
guided path.

All three stages consume and produce plain image arrays; a run is fully
deterministic for a fixed (image, prompt, config, backend).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .backends.base import CAP_BLIND, CAP_INPAINT, CAP_PROMPT_GUIDED, Enhancer
from .backends.builtin import BuiltinBackend
from .errors import (
    ConfigError,
    ImageSizeError,
    IntegrityError,
    QRefineError,
    StageError,
)
from .field import flatten_bicubic, make_mask, mask_fraction, noise_weight
from .imaging import MIN_REFINABLE_SIZE, as_image, blend, check_same_size
from .iqa import DefaultScorer, QualityScorer, ScorerConfig, global_quality

DEFAULT_POSITIVE_WORDS = ("high quality", "sharp focus", "highly detailed")

# per-channel tolerance for the stage-2 preservation contract
PRESERVE_TOL = 1.0 / 255.0

CSV_HEADER = "image_id,stage,executed,skip_reason,mask_fraction,q_before,q_after,backend,millis"


@dataclass(frozen=True)
class RefineConfig:
    """Every knob of a pipeline run.

    ``b_lq < b_mq < b_hq`` partition quality into low, medium, and high
    bands. Stage 1 cannot run without stage 2: noise injection is a setup
    move for the inpainting pass, never a standalone refinement. The
    guided enhancer runs at a lower strength than inpainting so it cannot
    damage an already-good image.
    """

    b_lq: float = 0.35
    b_mq: float = 0.60
    b_hq: float = 0.75
    noise_mu: float = 0.5
    noise_sigma: float = 0.25
    inpaint_strength: float = 0.75
    enhance_strength: float = 0.30
    steps: int = 30
    seed: int = 0
    stages_enabled: frozenset = frozenset({1, 2, 3})
    min_mask_fraction: float = 0.005
    positive_words: tuple = DEFAULT_POSITIVE_WORDS
    scorer: ScorerConfig = field(default_factory=ScorerConfig)

    def __post_init__(self):
        if not 0.0 < self.b_lq < self.b_mq < self.b_hq < 1.0:
            raise ConfigError(
                f"thresholds must satisfy 0 < b_lq < b_mq < b_hq < 1, "
                f"got {self.b_lq}, {self.b_mq}, {self.b_hq}"
            )
        stages = frozenset(self.stages_enabled)
        if not stages <= {1, 2, 3}:
            raise ConfigError(f"unknown stages: {sorted(stages - {1, 2, 3})}")
        if 1 in stages and 2 not in stages:
            raise ConfigError(
                "stage 1 (noise) requires stage 2 (inpainting); it is a "
                "setup move and never runs alone"
            )
        object.__setattr__(self, "stages_enabled", stages)
        if not 0.0 <= self.inpaint_strength <= 1.0:
            raise ConfigError("inpaint_strength must be in [0, 1]")
        if not 0.0 <= self.enhance_strength <= 1.0:
            raise ConfigError("enhance_strength must be in [0, 1]")
        if self.enhance_strength >= self.inpaint_strength:
            raise ConfigError(
                "enhance_strength must be smaller than inpaint_strength"
            )
        if not 0.0 <= self.noise_mu <= 1.0 or self.noise_sigma <= 0.0:
            raise ConfigError("noise parameters must lie in the unit range")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not 0.0 <= self.min_mask_fraction < 1.0:
            raise ConfigError("min_mask_fraction must be in [0, 1)")
        object.__setattr__(self, "positive_words", tuple(self.positive_words))

    def with_stages(self, stages) -> "RefineConfig":
        return replace(self, stages_enabled=frozenset(stages))


@dataclass
class StageRecord:
    """Outcome of one stage for one image."""

    stage: int
    executed: bool = False
    skip_reason: str = ""
    mask_fraction: float = 0.0
    q_before: float = 0.0
    q_after: float = 0.0
    backend: str = ""
    wall_time: float = 0.0

    def csv_row(self, image_id: str) -> str:
        # millis is serialized as 0 so artifacts stay byte-identical across
        # runs; live timing is on the record object
        return (
            f"{image_id},{self.stage},{str(self.executed).lower()},"
            f"{self.skip_reason},{self.mask_fraction:.6f},"
            f"{self.q_before:.6f},{self.q_after:.6f},{self.backend},0"
        )

    def text_line(self) -> str:
        return (
            f"stage={self.stage} executed={str(self.executed).lower()} "
            f"skip_reason={self.skip_reason or '-'} "
            f"mask_fraction={self.mask_fraction:.6f} "
            f"q_before={self.q_before:.6f} q_after={self.q_after:.6f} "
            f"backend={self.backend or '-'} millis=0"
        )


@dataclass
class StageReport:
    """Per-stage records for one pipeline run, in stage order."""

    records: list = field(default_factory=list)

    def record_for(self, stage: int) -> StageRecord:
        for rec in self.records:
            if rec.stage == stage:
                return rec
        raise KeyError(f"no record for stage {stage}")

    def executed_stages(self) -> list:
        return [r.stage for r in self.records if r.executed]

    def to_text(self) -> str:
        return "\n".join(r.text_line() for r in self.records) + "\n"

    def csv_rows(self, image_id: str) -> list:
        return [r.csv_row(image_id) for r in self.records]


def stage1_noise(img: np.ndarray, weight_map: np.ndarray, cfg: RefineConfig) -> np.ndarray:
    """Blend seeded Gaussian noise into the image by the weight map.

    The noise field is i.i.d. Normal(noise_mu, noise_sigma^2) per channel,
    clamped to [0, 1], drawn from a generator seeded with ``cfg.seed``. An
    all-zero weight map returns the input bit-identically without touching
    the generator.
    """
    img = as_image(img)
    check_same_size(img, np.asarray(weight_map))
    if not np.any(weight_map > 0.0):
        return img
    h, w = img.shape[:2]
    rng = np.random.default_rng(cfg.seed)
    noise = rng.normal(cfg.noise_mu, cfg.noise_sigma, size=(h, w, 3))
    noise = np.clip(noise, 0.0, 1.0).astype(np.float32)
    return blend(img, noise, weight_map)


def stage2_inpaint(
    img: np.ndarray,
    mask: np.ndarray,
    prompt: str,
    cfg: RefineConfig,
    backend: Enhancer,
) -> tuple[np.ndarray, bool, str]:
    """Delegate masked-region regeneration to the backend.

    Returns ``(image, executed, skip_reason)``. Masks below
    ``cfg.min_mask_fraction`` skip the backend call entirely. The result
    must preserve every unmasked pixel within 1/255 per channel or the
    stage raises an integrity error.
    """
    img = as_image(img)
    mask = np.asarray(mask, dtype=bool)
    check_same_size(img, mask)
    if not backend.supports(CAP_INPAINT):
        raise StageError(f"backend '{backend.name}' does not support inpainting")
    frac = mask_fraction(mask)
    if frac < cfg.min_mask_fraction:
        reason = "empty_mask" if frac == 0.0 else "mask_below_threshold"
        return img, False, reason
    try:
        result = backend.inpaint(
            img,
            mask,
            prompt,
            strength=cfg.inpaint_strength,
            steps=cfg.steps,
            seed=cfg.seed,
        )
    except IntegrityError:
        raise
    except Exception as exc:
        raise StageError(f"inpainting backend '{backend.name}' failed: {exc}") from exc
    result = as_image(result)
    check_same_size(img, result)
    unmasked = ~mask
    if unmasked.any():
        drift = np.abs(result[unmasked] - img[unmasked]).max()
        if drift > PRESERVE_TOL:
            raise IntegrityError(
                f"backend '{backend.name}' changed unmasked pixels by {drift:.6f} "
                f"(tolerance {PRESERVE_TOL:.6f})"
            )
    return result, True, ""


def augment_prompt(prompt: str, positive_words=DEFAULT_POSITIVE_WORDS) -> str:
    """Append quality-boosting words not already present in the prompt.

    The presence check is a case-insensitive substring test; list order is
    preserved; an empty prompt yields just the joined words.
    """
    out = prompt
    for word in positive_words:
        if word.lower() in out.lower():
            continue
        out = f"{out}, {word}" if out else word
    return out


def stage3_enhance(
    img: np.ndarray,
    prompt: str,
    cfg: RefineConfig,
    blind: Enhancer,
    guided: Enhancer,
    scorer: QualityScorer | None = None,
) -> tuple[np.ndarray, str]:
    """Globally enhance the image, routed by its current global quality.

    Quality is re-measured on the image as it stands now (stages 1-2 have
    changed it). Strictly below ``b_hq`` the blind enhancer runs at full
    strength; at or above it the prompt-guided enhancer runs gently with
    the augmented prompt. Returns ``(image, enhancer_label)``.
    """
    img = as_image(img)
    scorer = scorer or DefaultScorer(cfg.scorer)
    q = global_quality(scorer.score_map(img))
    try:
        if q < cfg.b_hq:
            result = blind.enhance(
                img, "", strength=1.0, steps=cfg.steps, seed=cfg.seed
            )
            label = blind.name
        else:
            result = guided.enhance(
                img,
                augment_prompt(prompt, cfg.positive_words),
                strength=cfg.enhance_strength,
                steps=cfg.steps,
                seed=cfg.seed,
            )
            label = guided.name
    except Exception as exc:
        raise StageError(f"enhancer failed: {exc}") from exc
    result = as_image(result)
    check_same_size(img, result)
    return np.clip(result, 0.0, 1.0).astype(np.float32), label


def _resolve_enhancers(backend: Enhancer) -> tuple[Enhancer, Enhancer]:
    """Pick stage-3 enhancers, falling back to the built-in classical one."""
    fallback = BuiltinBackend()
    blind = backend if backend.supports(CAP_BLIND) else fallback
    guided = backend if backend.supports(CAP_PROMPT_GUIDED) else fallback
    return blind, guided


def run_pipeline(
    img: np.ndarray,
    prompt: str = "",
    cfg: RefineConfig | None = None,
    backend: Enhancer | None = None,
    scorer: QualityScorer | None = None,
) -> tuple[np.ndarray, StageReport]:
    """Run the enabled stages in order 1 -> 2 -> 3 over one image.

    The quality map and its flattened fields are computed once from the
    input; each stage consumes the previous stage's output. Disabled stages
    pass through and are recorded as such. The first failing stage aborts
    with a ``StageError`` carrying the partial report on its ``report``
    attribute.
    """
    cfg = cfg or RefineConfig()
    backend = backend or BuiltinBackend()
    scorer = scorer or DefaultScorer(cfg.scorer)
    img = as_image(img)
    h, w = img.shape[:2]
    if h < MIN_REFINABLE_SIZE or w < MIN_REFINABLE_SIZE:
        raise ImageSizeError(f"image {h}x{w} below minimum refinable size")

    quality_map = scorer.score_map(img)
    flattened = flatten_bicubic(quality_map, h, w)
    weight_map = noise_weight(flattened, cfg.b_lq)
    mask = make_mask(flattened, cfg.b_mq)

    report = StageReport()
    current = img
    q_current = global_quality(quality_map)

    def abort(stage: int, exc: Exception):
        # keep the error's own type (StageError, IntegrityError, ...) so
        # callers can distinguish backend failures from contract violations
        err = exc if isinstance(exc, QRefineError) else StageError(str(exc))
        err.report = report
        raise err from exc

    # stage 1: noise injection over the low-quality weight map
    rec = StageRecord(stage=1, q_before=q_current, q_after=q_current)
    rec.mask_fraction = float((weight_map > 0.0).mean())
    if 1 not in cfg.stages_enabled:
        rec.skip_reason = "disabled"
    elif rec.mask_fraction == 0.0:
        rec.skip_reason = "no_lq_pixels"
    else:
        t0 = time.perf_counter()
        try:
            current = stage1_noise(current, weight_map, cfg)
        except Exception as exc:
            report.records.append(rec)
            abort(1, exc)
        rec.wall_time = time.perf_counter() - t0
        rec.executed = True
        q_current = global_quality(scorer.score_map(current))
        rec.q_after = q_current
    report.records.append(rec)

    # stage 2: mask inpainting through the backend
    rec = StageRecord(stage=2, q_before=q_current, q_after=q_current)
    rec.mask_fraction = mask_fraction(mask)
    if 2 not in cfg.stages_enabled:
        rec.skip_reason = "disabled"
    else:
        t0 = time.perf_counter()
        try:
            current, executed, reason = stage2_inpaint(
                current, mask, prompt, cfg, backend
            )
        except Exception as exc:
            report.records.append(rec)
            abort(2, exc)
        rec.wall_time = time.perf_counter() - t0
        rec.executed = executed
        rec.skip_reason = reason
        if executed:
            rec.backend = backend.name
            q_current = global_quality(scorer.score_map(current))
            rec.q_after = q_current
    report.records.append(rec)

    # stage 3: quality-routed global enhancement
    rec = StageRecord(stage=3, q_before=q_current, q_after=q_current)
    if 3 not in cfg.stages_enabled:
        rec.skip_reason = "disabled"
    else:
        blind, guided = _resolve_enhancers(backend)
        t0 = time.perf_counter()
        try:
            current, label = stage3_enhance(
                current, prompt, cfg, blind, guided, scorer
            )
        except Exception as exc:
            report.records.append(rec)
            abort(3, exc)
        rec.wall_time = time.perf_counter() - t0
        rec.executed = True
        rec.backend = label
        q_current = global_quality(scorer.score_map(current))
        rec.q_after = q_current
    report.records.append(rec)

    return current, report
