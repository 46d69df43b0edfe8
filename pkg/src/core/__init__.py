"""
ESTA Core
=========

Core system components: constants, configuration and errors.

The pipeline state lives in ``src.core.state``; it depends on
``src.models`` and is imported from there directly.
"""

from .constants import (
    NODE_NAMES,
    STAGE_GROUPS,
    ESTIMATE_METHODS,
    FLOAT_FORMAT,
)

from .config import (
    EstaConfig,
    SimulationConfig,
    get_config,
    load_config,
    set_config,
    reset_config,
)

from .exceptions import (
    EstaError,
    ConfigError,
    StageError,
)

__all__ = [
    # Constants
    "NODE_NAMES",
    "STAGE_GROUPS",
    "ESTIMATE_METHODS",
    "FLOAT_FORMAT",
    # Config
    "EstaConfig",
    "SimulationConfig",
    "get_config",
    "load_config",
    "set_config",
    "reset_config",
    # Errors
    "EstaError",
    "ConfigError",
    "StageError",
]
