"""Configuration management for stimtomo."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from stimtomo.errors import ConfigError, InputFileError

# Default config directory
CONFIG_DIR = Path.home() / ".stimtomo"
CONFIG_FILE = CONFIG_DIR / "config.json"


@dataclass
class StimtomoConfig:
    """User-level defaults applied when a command line leaves them unset."""

    rng_seed: int = 42
    settings: int = 36  # 36 (overcomplete) or 16
    weights: str = "none"  # "none" | "inverse-variance"
    restarts: int = 5
    # Run logging settings
    run_logging: bool = True
    run_log_level: str = "INFO"  # DEBUG, INFO, WARNING, ERROR

    def to_dict(self) -> dict[str, Any]:
        """Convert config to dictionary."""
        return {
            "rng_seed": self.rng_seed,
            "settings": self.settings,
            "weights": self.weights,
            "restarts": self.restarts,
            "run_logging": self.run_logging,
            "run_log_level": self.run_log_level,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StimtomoConfig:
        """Create config from dictionary."""
        config = cls(
            rng_seed=int(data.get("rng_seed", 42)),
            settings=int(data.get("settings", 36)),
            weights=str(data.get("weights", "none")),
            restarts=int(data.get("restarts", 5)),
            run_logging=bool(data.get("run_logging", True)),
            run_log_level=str(data.get("run_log_level", "INFO")),
        )
        require(config.settings in (16, 36), "settings", "must be 16 or 36")
        require(
            config.weights in ("none", "inverse-variance"),
            "weights",
            "must be 'none' or 'inverse-variance'",
        )
        require(config.restarts >= 0, "restarts", "must be non-negative")
        return config


class ConfigManager:
    """Manages stimtomo user configuration."""

    def __init__(self, config_dir: Path | None = None) -> None:
        """Initialize config manager.

        Args:
            config_dir: Custom config directory (defaults to ~/.stimtomo)
        """
        self.config_dir = config_dir or CONFIG_DIR
        self.config_file = self.config_dir / "config.json"

        self._config: StimtomoConfig | None = None

    def ensure_dirs(self) -> None:
        """Ensure the config directory exists."""
        self.config_dir.mkdir(parents=True, exist_ok=True)

    def config_exists(self) -> bool:
        """Check if configuration file exists."""
        return self.config_file.exists()

    def load_config(self) -> StimtomoConfig:
        """Load configuration from file."""
        if self._config is not None:
            return self._config

        if not self.config_file.exists():
            self._config = StimtomoConfig()
            return self._config

        with open(self.config_file) as f:
            data = json.load(f)
            self._config = StimtomoConfig.from_dict(data)

        return self._config

    def save_config(self, config: StimtomoConfig | None = None) -> None:
        """Save configuration to file."""
        if config is not None:
            self._config = config

        if self._config is None:
            self._config = StimtomoConfig()

        self.ensure_dirs()
        with open(self.config_file, "w") as f:
            json.dump(self._config.to_dict(), f, indent=2)

    def get_config_value(self, key: str) -> Any:
        """Get a specific config value."""
        config = self.load_config()
        return getattr(config, key, None)

    def set_config_value(self, key: str, value: Any) -> None:
        """Set a specific config value."""
        config = self.load_config()
        if hasattr(config, key):
            setattr(config, key, value)
            self.save_config(config)
        else:
            raise ValueError(f"Unknown config key: {key}")


# Global config manager instance
_config_manager: ConfigManager | None = None


def get_config_manager() -> ConfigManager:
    """Get the global config manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def require(condition: bool, field: str, message: str) -> None:
    """Raise ConfigError for ``field`` unless ``condition`` holds."""
    if not condition:
        raise ConfigError(field, message)


def require_finite(value: float, field: str) -> float:
    require(math.isfinite(value), field, f"must be finite, got {value!r}")
    return value


def load_document(path: Path | str) -> dict[str, Any]:
    """Load a JSON (or YAML) mapping from disk.

    Args:
        path: File to read

    Returns:
        The parsed mapping

    Raises:
        InputFileError: If the file is missing or is not a mapping
    """
    path = Path(path)
    if not path.exists():
        raise InputFileError(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise InputFileError(path, f"cannot parse: {e}") from e
    if not isinstance(data, dict):
        raise InputFileError(path, "expected a mapping at the top level")
    return data
