# config_manager.py

"""
Configuration module for the polar coding toolkit.
Handles reading and writing configuration settings (polar.config.json).
"""

import copy
import os
import json
from typing import Dict, Any, Optional, Union, List
import logging

from .path_utils import normalize_path, get_project_root
from ..core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

CONFIG_FILENAME = "polar.config.json"

# Default configuration values
DEFAULT_CONFIG: Dict[str, Any] = {
    "tolerances": {
        "distance": 1e-9,       # absolute, at E_s = 1
        "energy": 1e-12,        # relative
        "normalization": 1e-9,
    },
    "simulation": {
        "default_seed": 0,
        "trial_block": 1000,     # trials per counter-based stream
        "design_snr_db": 2.0,
        "construction_trials": 100000,
        "ci_level": 0.95,
        "exact_ci_below": 10,    # frame errors below this use the exact binomial interval
        "likelihood_floor": 1e-300,
    },
    "search": {
        "max_exhaustive_q": 8,
        "objective": "spectrum",  # Options: "spectrum", "union_bound"
        "objective_snr_db": 6.0,
    },
    "polarization": {
        "unpolarized_low": 0.05,
        "unpolarized_high": 0.95,
    },
    "compute": {
        "max_workers": None,     # None = auto (CPU count based)
        "show_progress": True,
    },
    "paths": {
        "output_dir": "results",
    },
}


class ConfigManager:
    """
    Configuration manager for the polar coding toolkit.
    Handles reading and writing configuration settings, and provides
    convenience methods for accessing specific settings.
    """

    _instance = None

    def __new__(cls):
        """
        Singleton pattern implementation to ensure only one config instance.

        Returns:
            ConfigManager instance
        """
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized: return
        self._config: Optional[Dict[str, Any]] = None
        self._config_path: Optional[str] = None
        self._load_config()
        self._initialized = True

    @property
    def config(self) -> Dict[str, Any]:
        """
        Get the configuration dictionary.

        Returns:
            Configuration dictionary
        """
        if self._config is None:
            self._load_config()
        return self._config  # type: ignore

    @property
    def config_path(self) -> str:
        """
        Get the path to the configuration file.

        Returns:
            Path to the configuration file
        """
        if self._config_path is None:
            self._config_path = normalize_path(os.path.join(get_project_root(), CONFIG_FILENAME))
        return self._config_path

    def _load_config(self) -> None:
        """Load configuration from file, falling back to defaults. Missing sections are filled in."""
        self._config_path = None
        try:
            if os.path.exists(self.config_path):
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    loaded = json.load(f)
                merged = copy.deepcopy(DEFAULT_CONFIG)
                self._deep_update(merged, loaded)
                self._config = merged
            else:
                self._config = copy.deepcopy(DEFAULT_CONFIG)
        except Exception as e:
            logger.error(f"Error loading configuration from {self.config_path}: {e}")
            self._config = copy.deepcopy(DEFAULT_CONFIG)

    def reload(self) -> None:
        """Re-read the configuration file (e.g. after the CWD changed)."""
        self._load_config()

    def _save_config(self) -> bool:
        """
        Save configuration to file.

        Returns:
            True if successful, False otherwise
        """
        try:
            os.makedirs(os.path.dirname(self.config_path), exist_ok=True)
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(self._config, f, indent=2, ensure_ascii=False)
            logger.info(f"Configuration saved to {self.config_path}")
            return True
        except OSError as e:
            logger.error(f"Error writing configuration file {self.config_path}: {e}")
            return False

    def get_section(self, section: str) -> Dict[str, Any]:
        """Return a configuration section, defaulting to DEFAULT_CONFIG's copy."""
        return self.config.get(section, copy.deepcopy(DEFAULT_CONFIG.get(section, {})))

    def get_setting(self, key: str, default: Any = None) -> Any:
        """
        Get a setting by dotted key path (e.g. 'simulation.trial_block').

        Args:
            key: Dotted key path
            default: Returned when the key does not exist

        Returns:
            The setting value
        """
        current: Any = self.config
        for part in key.split('.'):
            if not isinstance(current, dict) or part not in current:
                return default
            current = current[part]
        return current

    def get_tolerance(self, name: str) -> float:
        return float(self.get_setting(f"tolerances.{name}", DEFAULT_CONFIG["tolerances"].get(name, 1e-9)))

    def get_simulation_setting(self, name: str, default: Any = None) -> Any:
        """Gets a setting from the 'simulation' section of the config."""
        if default is None:
            default = DEFAULT_CONFIG["simulation"].get(name)
        return self.get_setting(f"simulation.{name}", default)

    def get_search_setting(self, name: str, default: Any = None) -> Any:
        """Gets a setting from the 'search' section of the config."""
        if default is None:
            default = DEFAULT_CONFIG["search"].get(name)
        return self.get_setting(f"search.{name}", default)

    def get_compute_setting(self, name: str, default: Any = None) -> Any:
        """Gets a setting from the 'compute' section of the config."""
        return self.get_setting(f"compute.{name}", default)

    def get_polarization_window(self) -> List[float]:
        window = self.get_section("polarization")
        return [float(window.get("unpolarized_low", 0.05)), float(window.get("unpolarized_high", 0.95))]

    def get_path(self, path_type: str, default_path: Optional[str] = None) -> str:
        """
        Get a path from configuration, resolved against the project root.

        Args:
            path_type: Key inside the 'paths' section (e.g. 'output_dir')
            default_path: Default path to use if not found in configuration

        Returns:
            Normalized absolute path
        """
        paths = self.get_section("paths")
        path = paths.get(path_type, default_path if default_path else DEFAULT_CONFIG["paths"].get(path_type, ""))
        if not os.path.isabs(path):
            path = os.path.join(get_project_root(), path)
        return normalize_path(path)

    def update_config_setting(self, key: str, value: Union[str, int, float, bool, None, List, Dict]) -> bool:
        """Update a specific configuration setting by dotted key. Unknown keys are rejected."""
        keys = key.split('.')
        current = self.config
        for k in keys[:-1]:
            if k not in current or not isinstance(current[k], dict):
                logger.error(f"Invalid configuration key: {key}")
                return False
            current = current[k]
        last_key = keys[-1]
        if last_key not in current:
            logger.error(f"Invalid configuration key: {key}")
            return False
        current[last_key] = value
        return self._save_config()

    def update_config(self, updates: Dict[str, Any]) -> bool:
        """
        Update configuration with new values (deep merge).

        Args:
            updates: Dictionary of configuration updates

        Returns:
            True if successful, False otherwise
        """
        if not isinstance(updates, dict):
            raise ConfigurationError("Configuration updates must be a JSON object")
        self._deep_update(self.config, updates)
        return self._save_config()

    def _deep_update(self, d: Dict[str, Any], u: Dict[str, Any]) -> None:
        """
        Recursively update a dictionary.

        Args:
            d: Dictionary to update
            u: Dictionary with updates
        """
        for k, v in u.items():
            if isinstance(v, dict) and k in d and isinstance(d[k], dict):
                self._deep_update(d[k], v)
            else:
                d[k] = v

    def reset_to_defaults(self) -> bool:
        """
        Reset configuration to default values.

        Returns:
            True if successful, False otherwise
        """
        self._config = copy.deepcopy(DEFAULT_CONFIG)
        return self._save_config()
