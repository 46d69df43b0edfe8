"""
Shared fixtures
===============
"""

import numpy as np
import pytest

from src.core.config import build_config, reset_config
from src.models import Intrinsics, Rotation


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> Rotation:
    """Rotation about a random axis by an angle drawn uniformly in [0, max_angle)"""
    axis = rng.normal(size=3)
    return Rotation.from_axis_angle(axis, rng.uniform(0.0, max_angle))


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def intrinsics() -> Intrinsics:
    """240x180 sensor, 20 deg horizontal FOV"""
    return Intrinsics.from_fov(240, 180, 20.0)


@pytest.fixture
def short_config():
    """Two-second sequence; everything else at defaults"""
    return build_config({"simulation": {"duration_s": 2.0}, "catalog": {"n_stars": 5000}})


@pytest.fixture(autouse=True)
def _fresh_global_config():
    reset_config()
    yield
    reset_config()
