"""Shared fixtures for the polar toolkit tests."""

import copy

import numpy as np
import pytest

from polar_utils.nonbinary_polar.core.kernels import builtin_kernel
from polar_utils.nonbinary_polar.core.signal_sets import make_psk, make_rotated4
from polar_utils.nonbinary_polar.utils.cache_manager import clear_all_caches
from polar_utils.nonbinary_polar.utils.config_manager import DEFAULT_CONFIG, ConfigManager


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Default configuration backed by a file inside tmp_path."""
    config_file = tmp_path / "polar.config.json"
    monkeypatch.setattr(ConfigManager, "config_path", property(lambda self: str(config_file)))
    manager = ConfigManager()
    manager._config = copy.deepcopy(DEFAULT_CONFIG)
    manager._config["compute"]["show_progress"] = False
    manager._config["paths"]["output_dir"] = str(tmp_path / "results")
    yield manager
    manager._config = copy.deepcopy(DEFAULT_CONFIG)
    clear_all_caches()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def psk4():
    return make_psk(4)


@pytest.fixture
def psk5():
    return make_psk(5)


@pytest.fixture
def psk8():
    return make_psk(8)


@pytest.fixture
def rotated4():
    return make_rotated4()


@pytest.fixture
def l5a():
    return builtin_kernel("L5a")


@pytest.fixture
def l8():
    return builtin_kernel("L8")
