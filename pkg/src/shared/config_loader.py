"""
Solver Configuration Files

Reads the optional YAML file given to ``solve --config``. Keys mirror the
command-line flags; see config/solver.example.yml.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import yaml

from src.shared.errors import ConfigurationError
from src.transport.endpoint import Backend

logger = logging.getLogger(__name__)

SOLVER_KEYS = {
    "dims",
    "iterations",
    "ranks",
    "backend",
    "coordinator",
    "rank",
    "listen",
    "listen_host",
    "seed",
    "tol",
    "out",
    "checkpoint_every",
    "amplitude",
}

_INT_KEYS = ("iterations", "ranks", "rank", "listen", "seed", "checkpoint_every")


def _parse_dims(value: Any) -> List[int]:
    if isinstance(value, str):
        value = value.split(",")
    try:
        return [int(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigurationError(f"dims must be a list of integers, got {value!r}")


def _parse_amplitude(value: Any) -> List[List[complex]]:
    """Rows of entries; each entry a number or a string such as "1j"."""
    try:
        rows = [[complex(str(entry).replace(" ", "")) for entry in row] for row in value]
    except (TypeError, ValueError):
        raise ConfigurationError(f"amplitude must be rows of complex numbers, got {value!r}")
    if len(rows) != 2 or any(len(row) != 2 for row in rows):
        raise ConfigurationError(f"amplitude must be 2x2, got {value!r}")
    return rows


def _parse_backend(value: Any) -> str:
    choices = [b.value for b in Backend]
    if str(value) not in choices:
        raise ConfigurationError(f"backend must be one of {', '.join(choices)}; got {value!r}")
    return str(value)


def load_solver_config(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load and check a solver configuration file.

    Returns:
        Mapping of the keys present in the file to parsed values

    Raises:
        ConfigurationError: Unreadable file, bad YAML, unknown keys or bad values
    """
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {path}: {e}")

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"Config {path} must be a mapping, got {type(raw).__name__}")

    unknown = sorted(set(raw) - SOLVER_KEYS)
    if unknown:
        raise ConfigurationError(f"Unknown keys in {path}: {', '.join(map(str, unknown))}")

    values: Dict[str, Any] = {}
    for key, value in raw.items():
        if value is None:
            continue
        if key == "dims":
            values[key] = _parse_dims(value)
        elif key == "amplitude":
            values[key] = _parse_amplitude(value)
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"{key} must be an integer, got {value!r}")
        elif key == "backend":
            values[key] = _parse_backend(value)
        elif key == "tol":
            try:
                values[key] = float(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"tol must be a number, got {value!r}")
        else:
            values[key] = str(value)

    logger.info(f"Loaded solver config {path}: {sorted(values)}")
    return values
