"""Config schema, defaults, validation, and file loading."""

from __future__ import annotations

import pytest

from polis.config import (
    ConfigError,
    SimConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    set_config_value,
)


def test_defaults_are_the_baseline_world():
    cfg = SimConfig()
    assert cfg.population == 9
    assert cfg.initial_food == 2.0
    assert cfg.initial_land == 10.0
    assert cfg.memory_depth == 30
    assert cfg.daily_consumption == 1.0
    assert cfg.traits.aggressiveness.mean == 0.0 and cfg.traits.aggressiveness.spread == 1.0
    assert cfg.traits.covetousness.mean == 1.25 and cfg.traits.covetousness.clamp == (1.1, 1.6)
    assert cfg.traits.strength.mean == 0.2 and cfg.traits.strength.spread == 0.7
    assert cfg.intelligence.beta_a == 50 and cfg.intelligence.beta_b == 50
    assert cfg.desires.peace == 1.0 and cfg.desires.glory == 1.0


def test_empty_file_gives_full_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path) == SimConfig()


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(
        """
population: 5
memory_depth: 10
seed: 42
traits:
  aggressiveness: {mean: 0.5, spread: 0.9}
intelligence: {mode: top_p, beta_a: 100, beta_b: 10}
erase_memory_on_role_change: true
"""
    )
    cfg = load_config(path)
    assert cfg.population == 5
    assert cfg.memory_depth == 10
    assert cfg.traits.aggressiveness.mean == 0.5
    assert cfg.traits.aggressiveness.clamp == (-1.0, 1.0)  # untouched default
    assert cfg.intelligence.mode == "top_p"
    assert cfg.erase_memory_on_role_change is True


def test_population_below_two_rejected():
    with pytest.raises(ConfigError, match="population"):
        config_from_dict({"population": 1})


def test_memory_depth_one_accepted():
    assert config_from_dict({"memory_depth": 1}).memory_depth == 1


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ConfigError, match="traits.aggressiveness"):
        config_from_dict({"traits": {"aggressiveness": {"mean": 0, "spread": 1, "oops": 2}}})
    with pytest.raises(ConfigError, match="top level"):
        config_from_dict({"populaton": 9})


def test_negative_resources_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"initial_food": -1})


def test_non_positive_spread_rejected():
    with pytest.raises(ConfigError, match="spread"):
        config_from_dict({"traits": {"strength": {"mean": 0, "spread": 0}}})


def test_bad_beta_rejected():
    with pytest.raises(ConfigError, match="beta"):
        config_from_dict({"intelligence": {"beta_a": -1}})


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("population: 9\n  bad_indent: {")
    with pytest.raises(ConfigError, match="line"):
        load_config(path)


def test_set_config_value_nested_path():
    cfg = set_config_value(SimConfig(), "traits.strength.spread", 2.0)
    assert cfg.traits.strength.spread == 2.0
    assert SimConfig().traits.strength.spread == 0.7  # original untouched


def test_set_config_value_unknown_path():
    with pytest.raises(ConfigError, match="unknown config path"):
        set_config_value(SimConfig(), "traits.luck.mean", 1)


def test_config_to_dict_round_trips():
    cfg = SimConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg
