"""
sandwichpy Configuration System
JSON configuration documents with dotted-key access.
"""

import copy
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .errors import ConfigError, ValidationError

CONFIG_ENV_VAR = "SANDWICHPY_CONFIG"
DATA_DIR = Path(__file__).resolve().parent.parent / "data"

_MISSING = object()


class Config:
    """
    Configuration document for one source setup.
    Values are addressed with dotted keys, e.g. ``crystal.length_mm``.
    """

    def __init__(self, config_dict: Optional[Dict[str, Any]] = None, source: Optional[str] = None):
        self._config: Dict[str, Any] = {}
        self.source = source
        self._raw = b""
        if config_dict is not None:
            self.load_from_dict(config_dict)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Config":
        """
        Load a configuration document from a JSON file.

        Args:
            path: Path to the JSON document

        Returns:
            Config holding the parsed document
        """
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise ConfigError(f"Cannot read configuration file {path}: {e.strerror}")
        try:
            document = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"Configuration file {path} is not valid JSON: {e}")
        if not isinstance(document, dict):
            raise ConfigError(f"Configuration file {path} must hold a JSON object")
        config = cls(document, source=str(path))
        config._raw = raw
        return config

    @staticmethod
    def default_path() -> Path:
        """Configuration path from the environment, or the bundled reference setup."""
        override = os.environ.get(CONFIG_ENV_VAR)
        if override:
            return Path(override)
        return DATA_DIR / "paper.json"

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value, creating intermediate sections."""
        if not isinstance(key, str) or not key:
            raise ValidationError("Config key must be a non-empty string")
        node = self._config
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[parts[-1]] = value

    def get(self, key: str, default: Any = _MISSING) -> Any:
        """Get a configuration value."""
        node: Any = self._config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is not _MISSING:
                    return default
                raise ConfigError("required field is missing", config_key=key)
            node = node[part]
        return node

    def has(self, key: str) -> bool:
        """Check if a configuration key exists and is not null."""
        return self.get(key, None) is not None

    def load_from_dict(self, config_dict: Dict[str, Any]) -> None:
        """Load configuration from a dictionary."""
        if not isinstance(config_dict, dict):
            raise ValidationError("Config must be loaded from a dictionary")
        self._config.update(copy.deepcopy(config_dict))

    def get_float(self, key: str, default: Any = _MISSING) -> float:
        """Get a numeric configuration value."""
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"must be a number, got {value!r}", config_key=key)
        return float(value)

    def section(self, key: str) -> Dict[str, Any]:
        """Get a nested section as a dictionary."""
        value = self.get(key)
        if not isinstance(value, dict):
            raise ConfigError(f"must be an object, got {value!r}", config_key=key)
        return value

    def as_dict(self) -> Dict[str, Any]:
        """Deep copy of the whole document."""
        return copy.deepcopy(self._config)

    def digest(self) -> str:
        """SHA-256 of the document as loaded (or of its canonical JSON form)."""
        payload = self._raw or json.dumps(self._config, sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def clear(self) -> None:
        """Clear all configuration."""
        self._config.clear()
        self._raw = b""
