"""Config file parsing: format rules, overrides, round trips."""

import pytest

from qrefine.config_io import (
    build_config,
    config_to_text,
    merge_config,
    parse_config_text,
)
from qrefine.errors import ConfigError


class TestParse:
    def test_basic_fields_and_comments(self):
        text = "# a comment\nb_lq=0.3\n\nsteps=12\nstages_enabled=2,3\n"
        overrides = parse_config_text(text)
        assert overrides == {
            "b_lq": 0.3,
            "steps": 12,
            "stages_enabled": frozenset({2, 3}),
        }

    def test_scorer_dotted_keys(self):
        overrides = parse_config_text("scorer.n=4\nscorer.tau_s=0.001\n")
        assert overrides == {"scorer": {"n": 4, "tau_s": 0.001}}

    def test_positive_words_comma_split(self):
        overrides = parse_config_text("positive_words=crisp, studio lighting\n")
        assert overrides["positive_words"] == ("crisp", "studio lighting")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("sharpness=11\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config_text("b_lq=often\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_text("b_lq 0.3\n")


class TestBuildAndMerge:
    def test_build_applies_scorer_overrides(self):
        cfg = build_config({"b_hq": 0.8, "scorer": {"n": 4}})
        assert cfg.b_hq == 0.8 and cfg.scorer.n == 4

    def test_invalid_combination_surfaces_as_config_error(self):
        with pytest.raises(ConfigError):
            build_config({"stages_enabled": frozenset({1, 3})})

    def test_cli_overrides_beat_file_values(self):
        cfg = merge_config({"seed": 1, "b_lq": 0.2}, {"seed": 9})
        assert cfg.seed == 9 and cfg.b_lq == 0.2

    def test_round_trip_through_text(self):
        cfg = build_config({"b_lq": 0.3, "steps": 12, "scorer": {"n": 4}})
        again = build_config(parse_config_text(config_to_text(cfg)))
        assert again == cfg
