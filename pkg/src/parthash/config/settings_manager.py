# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
SettingsManager module.

Loads the ambient application settings (logging, output defaults) from a
TOML file. Search order:

1. The path given with ``--config`` on the command line.
2. ``parthash.toml`` in the working directory.
3. The per-user config directory (``platformdirs.user_config_dir``).
4. The site config directory (``platformdirs.site_config_dir``).

Sections found in the file are merged over `SettingsManager.DEFAULT_CONFIG`
key by key. Settings are never written back: a missing file simply means the
defaults apply, so a run only touches its own output directory.

Training hyperparameters do not live here; see `parthash.config.run_config`.
"""

from __future__ import annotations

import copy
import tomllib
from pathlib import Path
from typing import Any, ClassVar, TypeVar

import platformdirs
import structlog

from parthash.__about__ import __app_config_name__, __app_name__
from parthash.exceptions import SettingsConfigurationError

log: structlog.stdlib.BoundLogger
log = structlog.get_logger(__name__)

T = TypeVar("T")


class SettingsManager:
    """
    Manage configuration loading and access for PartHash.

    Attributes
    ----------
    DEFAULT_SETTINGS_LOCATIONS (ClassVar[list[Path]]):
        Ordered list of file paths checked when no CLI path is given.
    DEFAULT_CONFIG (ClassVar[dict[str, dict[str, Any]]]):
        Fallback values for every known section.
    """

    APP_NAME: ClassVar[str] = __app_name__.lower()
    CONF_NAME: ClassVar[str] = __app_config_name__.lower()

    DEFAULT_SETTINGS_LOCATIONS: ClassVar[list[Path]] = [
        Path(CONF_NAME),
        Path(platformdirs.user_config_dir(APP_NAME, appauthor=False)) / CONF_NAME,
        Path(platformdirs.site_config_dir(APP_NAME, appauthor=False)) / CONF_NAME,
    ]

    DEFAULT_CONFIG: ClassVar[dict[str, dict[str, Any]]] = {
        "logger": {
            "level": "WARNING",
            "log_directory": str(platformdirs.user_log_dir(APP_NAME, appauthor=False)),
        },
        "console_handler": {"enabled": True, "colors": False},
        "file_handler": {
            "enabled": False,
            "file_name": APP_NAME + ".log",
        },
        "limited_file_handler": {
            "enabled": False,
            "file_name": "limited_" + APP_NAME + ".log",
            "max_bytes": 1024 * 1024,
            "backup_count": 3,
        },
        "output": {
            "report_format": "text",
            "workers": 0,
        },
    }

    def __init__(self) -> None:
        """Create an empty manager; call `load_settings` to populate it."""
        self._settings: dict[str, dict[str, Any]] = copy.deepcopy(self.DEFAULT_CONFIG)
        self._loaded_config_file: Path | None = None
        self._internal_errors: list[str] = []
        self.logger = structlog.get_logger(__name__)

    @property
    def loaded_config_file(self) -> Path | None:
        """Return the path of the file the settings came from, if any."""
        return self._loaded_config_file

    @property
    def internal_errors(self) -> list[str]:
        """Return the list of non-fatal loading problems."""
        return self._internal_errors

    def load_settings(self, config_path_from_cli: Path | None = None) -> None:
        """
        Load the settings, merging the first file found over the defaults.

        Raises:
            SettingsConfigurationError: If the CLI path is missing, or a found
                file cannot be read or decoded.
        """
        self._internal_errors = []
        self._loaded_config_file = None
        loaded = self._load_config_from_paths(config_path_from_cli)
        self._settings = self._merge_over_defaults(loaded)

    def _load_config_from_paths(self, config_path_from_cli: Path | None) -> dict[str, Any]:
        if config_path_from_cli is not None:
            if not config_path_from_cli.is_file():
                msg = f"Configuration file not found: {config_path_from_cli}"
                self._internal_errors.append(msg)
                raise SettingsConfigurationError(msg)
            return self._load_from_file(config_path_from_cli)

        for path in self.DEFAULT_SETTINGS_LOCATIONS:
            self.logger.debug("Checking predefined config location", path=str(path))
            if path.is_file():
                return self._load_from_file(path)

        self.logger.debug("No configuration file found; using default settings.")
        self._internal_errors.append("No configuration file found; using default settings.")
        return {}

    def _load_from_file(self, path: Path) -> dict[str, Any]:
        self.logger.info("Loading configuration from file", path=str(path))
        try:
            with path.open("rb") as f:
                config = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            msg = f"TOML decoding failed for configuration file: {path}"
            self._internal_errors.append(msg)
            raise SettingsConfigurationError(msg, e) from e
        except OSError as e:
            msg = f"Could not access configuration file: {path}"
            self._internal_errors.append(msg)
            raise SettingsConfigurationError(msg, e) from e
        self._loaded_config_file = path
        return config

    def _merge_over_defaults(self, loaded: dict[str, Any]) -> dict[str, dict[str, Any]]:
        merged = copy.deepcopy(self.DEFAULT_CONFIG)
        for section, values in loaded.items():
            if not isinstance(values, dict):
                msg = f"Section '{section}' must be a table, got {type(values).__name__}."
                self._internal_errors.append(msg)
                raise SettingsConfigurationError(msg)
            merged.setdefault(section, {}).update(values)
        return merged

    def get_setting(self, section: str, key: str, default: T | None = None) -> T | Any:
        """Return ``section.key`` or ``default`` when either is missing."""
        return self._settings.get(section, {}).get(key, default)

    def get_section(self, section: str) -> dict[str, Any]:
        """Return a copy of one section (empty when unknown)."""
        return dict(self._settings.get(section, {}))

    def as_dict(self) -> dict[str, dict[str, Any]]:
        """Return a deep copy of the full configuration."""
        return copy.deepcopy(self._settings)


class SettingsManagerSingleton:
    """
    Singleton class for SettingsManager.

    That ensures a single instance manages application settings.
    """

    _instance: SettingsManager | None = None
    _initialization_errors: ClassVar[list[str]] = []
    _is_configured: ClassVar[bool] = False

    @classmethod
    def get_instance(cls) -> SettingsManager:
        """Return the single instance, creating an unloaded one on first use."""
        if cls._instance is None:
            cls._instance = SettingsManager()
        return cls._instance

    @classmethod
    def initialize_from_context(cls, config_path: Path | None = None) -> None:
        """
        Load the settings once; later calls are recorded and ignored.

        Raises:
            SettingsConfigurationError: Propagated from `SettingsManager.load_settings`.
        """
        if cls._is_configured:
            cls._initialization_errors.append("SettingsManagerSingleton already configured. Cannot re-configure.")
            return

        cls._initialization_errors.clear()
        instance = cls.get_instance()
        try:
            instance.load_settings(config_path)
        except SettingsConfigurationError as e:
            cls._initialization_errors.append(f"Error during SettingsManager initialization: {e}")
            raise
        cls._initialization_errors.extend(instance.internal_errors)
        cls._is_configured = True

    @classmethod
    def get_initialization_errors(cls) -> list[str]:
        """Expose initialization errors for testing and debugging."""
        errors = list(cls._initialization_errors)
        if cls._instance:
            errors.extend(cls._instance.internal_errors)
        return sorted(set(errors))

    @classmethod
    def reset(cls) -> None:
        """Reset the singleton instance and its configuration state."""
        cls._instance = None
        cls._initialization_errors.clear()
        cls._is_configured = False
