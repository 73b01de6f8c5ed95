"""Variance-aware initialization for point convolutions.

Thin wrapper over the C++ core. Configs are plain dicts with the same
schema as the `pcinit` CLI (see docs/config.md).
"""

import json

from . import _core
from ._core import (
    ConfigError,
    Error,
    InvalidArgument,
    clustered_cloud,
    discrete_equivalence_error,
    estimate,
    estimate_density,
    he_variance,
    radius_neighbors,
    standard_variance,
    uniform_cloud,
)

__version__ = _core.__version__


def normalize_config(config: dict) -> dict:
    """Validated config with all defaults filled in."""
    return json.loads(_core.normalize_config(json.dumps(config)))


def run(config: dict) -> dict:
    """Run one experiment and return its manifest."""
    return json.loads(_core.run(json.dumps(config)))


__all__ = [
    "ConfigError",
    "Error",
    "InvalidArgument",
    "clustered_cloud",
    "discrete_equivalence_error",
    "estimate",
    "estimate_density",
    "he_variance",
    "normalize_config",
    "radius_neighbors",
    "run",
    "standard_variance",
    "uniform_cloud",
]
