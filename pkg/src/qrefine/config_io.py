"""Flat key=value config files mirroring the RefineConfig field names.

One ``key=value`` pair per line; blank lines and ``#`` comments are
skipped. Scorer fields nest with a dot (``scorer.n=8``). Lists are
comma-separated (``stages_enabled=1,2,3``; ``positive_words=high quality,
sharp focus``). CLI flags override file values.
"""

from __future__ import annotations

from .errors import ConfigError
from .iqa import ScorerConfig
from .stages import RefineConfig

_FLOAT_KEYS = {
    "b_lq",
    "b_mq",
    "b_hq",
    "noise_mu",
    "noise_sigma",
    "inpaint_strength",
    "enhance_strength",
    "min_mask_fraction",
}
_INT_KEYS = {"steps", "seed"}
_SCORER_FLOAT_KEYS = {"tau_s", "tau_n"}
_SCORER_INT_KEYS = {"n", "cells_per_patch_side"}


def parse_stage_list(text: str) -> frozenset:
    try:
        stages = frozenset(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad stage list {text!r}") from exc
    return stages


def parse_config_text(text: str) -> dict:
    """Parse the file format into an override mapping (no validation yet)."""
    overrides: dict = {}
    scorer: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key in _FLOAT_KEYS:
                overrides[key] = float(value)
            elif key in _INT_KEYS:
                overrides[key] = int(value)
            elif key == "stages_enabled":
                overrides[key] = parse_stage_list(value)
            elif key == "positive_words":
                overrides[key] = tuple(
                    w.strip() for w in value.split(",") if w.strip()
                )
            elif key.startswith("scorer."):
                sub = key.split(".", 1)[1]
                if sub in _SCORER_FLOAT_KEYS:
                    scorer[sub] = float(value)
                elif sub in _SCORER_INT_KEYS:
                    scorer[sub] = int(value)
                else:
                    raise ConfigError(f"line {lineno}: unknown scorer key {sub!r}")
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    if scorer:
        overrides["scorer"] = scorer
    return overrides


def build_config(overrides: dict) -> RefineConfig:
    """Construct a validated RefineConfig from an override mapping."""
    overrides = dict(overrides)
    scorer_over = overrides.pop("scorer", None)
    scorer = ScorerConfig(**scorer_over) if scorer_over else ScorerConfig()
    try:
        return RefineConfig(scorer=scorer, **overrides)
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def merge_config(file_overrides: dict, cli_overrides: dict) -> RefineConfig:
    """File values first, CLI flags on top."""
    merged = dict(file_overrides)
    cli_scorer = cli_overrides.pop("scorer", None)
    merged.update(cli_overrides)
    if cli_scorer:
        merged["scorer"] = {**merged.get("scorer", {}), **cli_scorer}
    cfg = build_config(merged)
    return cfg


def config_to_text(cfg: RefineConfig) -> str:
    """Serialize a config back to the file format (round-trips)."""
    lines = [
        f"b_lq={cfg.b_lq}",
        f"b_mq={cfg.b_mq}",
        f"b_hq={cfg.b_hq}",
        f"noise_mu={cfg.noise_mu}",
        f"noise_sigma={cfg.noise_sigma}",
        f"inpaint_strength={cfg.inpaint_strength}",
        f"enhance_strength={cfg.enhance_strength}",
        f"steps={cfg.steps}",
        f"seed={cfg.seed}",
        f"stages_enabled={','.join(str(s) for s in sorted(cfg.stages_enabled))}",
        f"min_mask_fraction={cfg.min_mask_fraction}",
        f"positive_words={', '.join(cfg.positive_words)}",
        f"scorer.n={cfg.scorer.n}",
        f"scorer.cells_per_patch_side={cfg.scorer.cells_per_patch_side}",
        f"scorer.tau_s={cfg.scorer.tau_s}",
        f"scorer.tau_n={cfg.scorer.tau_n}",
    ]
    return "\n".join(lines) + "\n"


__all__ = [
    "build_config",
    "config_to_text",
    "load_config_file",
    "merge_config",
    "parse_config_text",
    "parse_stage_list",
]
