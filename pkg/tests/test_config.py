"""
Configuration Tests
===================

Defaults, YAML loading, ``section.key=value`` overrides and the global
configuration instance.
"""

from pathlib import Path

import pytest

from src.core.config import (
    EstaConfig,
    build_config,
    get_config,
    load_config,
    reset_config,
    set_config,
)
from src.core.exceptions import ConfigError

SHIPPED_CONFIG = Path(__file__).resolve().parents[1] / "config" / "esta.yaml"


# ==================== DEFAULTS ====================

def test_defaults_describe_reference_sequence():
    """Default values reproduce the standard 45 s synthetic sequence"""
    config = EstaConfig()
    assert (config.simulation.width, config.simulation.height) == (240, 180)
    assert config.simulation.fov_deg == 20.0
    assert config.simulation.duration_s == 45.0
    assert config.simulation.angular_speed_dps == 4.0
    assert config.frames.integration_ms == 40.0
    assert (config.frames.eps1, config.frames.eps2) == (2.0, 50)
    assert (config.registration.window, config.registration.trim_fraction) == (5, 0.7)
    assert config.averaging.alpha == 1.0


def test_shipped_yaml_matches_defaults():
    """config/esta.yaml lists every default unchanged"""
    assert load_config(SHIPPED_CONFIG).echo() == EstaConfig().echo()


# ==================== LOADING ====================

def test_yaml_values_and_overrides(tmp_path):
    """Overrides win over the YAML file, which wins over defaults"""
    path = tmp_path / "run.yaml"
    path.write_text("seed: 3\nregistration:\n  window: 2\n  trim_fraction: 0.5\n", encoding="utf-8")

    config = load_config(path, overrides=["registration.window=4", "bundle.enabled=false"])

    assert config.seed == 3
    assert config.registration.window == 4
    assert config.registration.trim_fraction == 0.5
    assert config.bundle.enabled is False
    assert config.frames.eps2 == 50


def test_override_values_are_yaml_typed():
    config = build_config(overrides=["simulation.axis=[0, 0, 1]", "output.dir=runs/x", "log_level=debug"])
    assert config.simulation.axis == [0, 0, 1]
    assert str(config.output.dir) == "runs/x"
    assert config.log_level == "DEBUG"


@pytest.mark.parametrize(
    "overrides, field",
    [
        (["simulation.width=0"], "simulation.width"),
        (["registration.trim_fraction=1.5"], "registration.trim_fraction"),
        (["frames.points=blobs"], "frames.points"),
        (["bundle.anchor=last"], "bundle.anchor"),
        (["simulation.axis=[0, 0, 0]"], "simulation.axis"),
        (["simulation.bogus=1"], "simulation.bogus"),
    ],
)
def test_invalid_values_name_the_field(overrides, field):
    """ConfigError names the first offending field"""
    with pytest.raises(ConfigError) as exc:
        build_config(overrides=overrides)
    assert exc.value.field == field
    assert str(exc.value).startswith(field)


def test_malformed_overrides():
    with pytest.raises(ConfigError):
        build_config(overrides=["registration.window"])
    with pytest.raises(ConfigError):
        build_config(overrides=["=3"])
    with pytest.raises(ConfigError):
        build_config(overrides=["seed=1", "seed.value=2"])


def test_yaml_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_error_is_a_value_error():
    with pytest.raises(ValueError):
        build_config({"seed": -1})


# ==================== GLOBAL INSTANCE ====================

def test_global_instance():
    first = get_config()
    assert get_config() is first

    custom = build_config(overrides=["seed=9"])
    set_config(custom)
    assert get_config().seed == 9

    reset_config()
    assert get_config().seed == 0


def test_sections_validate_assignment():
    config = EstaConfig()
    with pytest.raises(ValueError):
        config.registration.window = 0
