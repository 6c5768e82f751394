"""
Configuration loader utilities
"""

import yaml
from pathlib import Path
from typing import Dict, Any

import sys
sys.path.append('src')

from utils.errors import ConfigError

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


def load_yaml_config(config_path: str) -> Dict[str, Any]:
    """
    Load YAML configuration file.

    Args:
        config_path: Path to YAML config file

    Returns:
        Configuration dictionary (empty for an empty file)
    """
    config_path = Path(config_path)

    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {config_path}: {exc}") from exc

    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError(f"{config_path} must hold a mapping at the top level")
    return config


def get_bounds_config(config_dir: str = str(DEFAULT_CONFIG_DIR)) -> Dict[str, Any]:
    """Solver defaults: numerics and oracle resolutions"""
    return load_yaml_config(str(Path(config_dir) / "bounds_config.yaml"))


def get_numerics_config(config_dir: str = str(DEFAULT_CONFIG_DIR)) -> Dict[str, Any]:
    """
    Load the default numeric parameters.

    Args:
        config_dir: Directory containing config files

    Returns:
        The `numerics` section of bounds_config.yaml
    """
    return dict(get_bounds_config(config_dir).get("numerics", {}))


def get_scenarios(config_dir: str = str(DEFAULT_CONFIG_DIR)) -> Dict[str, Any]:
    """
    Load the named scenarios.

    Args:
        config_dir: Directory containing config files

    Returns:
        Scenario name -> scenario mapping
    """
    return load_yaml_config(str(Path(config_dir) / "scenarios.yaml"))
