import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml


DEFAULTS_FILE = Path(__file__).resolve().parent.parent / 'defaults.yaml'
USER_CONFIG_FILE = Path.home() / '.groupmix' / 'config.yaml'
ENV_VAR = 'GROUPMIX_CONFIG'


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ValueError(f"Malformed YAML in config file {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must contain a mapping, got {type(data).__name__}")
    return data


class GroupMixConfig:
    """
    Singleton holding groupmix numeric policy and run defaults.

    Sources, later overriding earlier: the packaged defaults.yaml,
    ~/.groupmix/config.yaml, the file named by $GROUPMIX_CONFIG, and any
    file passed to load_file (the CLI's --config).
    """
    _instance = None

    def __new__(cls, config_file: Optional[str] = None):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self, config_file: Optional[str] = None):
        """Initialize singleton (only happens once)"""
        if self._initialized:
            return

        self.sources = [str(DEFAULTS_FILE)]
        self._settings = _read_yaml(DEFAULTS_FILE)

        if USER_CONFIG_FILE.exists():
            self.load_file(USER_CONFIG_FILE)

        env_file = os.environ.get(ENV_VAR)
        if env_file:
            self.load_file(env_file)

        if config_file is not None:
            self.load_file(config_file)

        self._initialized = True

    @classmethod
    def get_instance(cls, config_file: Optional[str] = None) -> 'GroupMixConfig':
        """Get the singleton instance"""
        if cls._instance is None:
            try:
                cls._instance = cls(config_file)
            except (FileNotFoundError, ValueError):
                cls._instance = None
                raise
        elif config_file is not None:
            cls._instance.load_file(config_file)
        return cls._instance

    @classmethod
    def reset(cls):
        """Drop the singleton so the next access reloads every source"""
        cls._instance = None

    def load_file(self, path):
        """
        Merge a YAML mapping into the current settings.

        :param path: Path to a YAML file
        """
        path = Path(path).expanduser()
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        self._settings = _merge(self._settings, _read_yaml(path))
        self.sources.append(str(path))

    def get(self, key: str, default: Any = None) -> Any:
        """
        Look up a dotted key such as 'search.restarts'.

        :param key: Dotted key path
        :param default: Returned when the key is absent
        """
        node = self._settings
        for part in key.split('.'):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any):
        """Set a dotted key in memory (not persisted)"""
        parts = key.split('.')
        node = self._settings
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value

    @property
    def settings(self) -> Dict[str, Any]:
        """A copy of the merged settings"""
        return copy.deepcopy(self._settings)


def setting(key: str, default: Any = None) -> Any:
    """Shorthand for GroupMixConfig.get_instance().get(key, default)"""
    return GroupMixConfig.get_instance().get(key, default)
