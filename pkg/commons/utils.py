import hashlib
import math
from pathlib import Path

import numpy as np

from errors.input_errors import ConfigError, DomainError


def check_alpha(alpha: float, strictly_positive: bool = False, source: str = None) -> float:
    """Validates the tuning parameter and returns it as a float."""
    try:
        value = float(alpha)
    except (TypeError, ValueError):
        raise DomainError(f"alpha must be a real number, got {alpha!r}", source=source)
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"alpha must be finite and >= 0, got {value}", source=source)
    if strictly_positive and value == 0:
        raise DomainError("alpha must be > 0 for this operation", source=source)
    return value


def check_level(level: float, source: str = None) -> float:
    value = float(level)
    if not 0 < value < 1:
        raise DomainError(f"significance level must lie in (0, 1), got {value}", source=source)
    return value


def parse_float_list(text: str, source: str = None) -> list[float]:
    """Parses "0,0.2,0.4" into [0.0, 0.2, 0.4]."""
    try:
        return [float(item) for item in text.split(",") if item.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse '{text}' as a comma separated list of numbers", source=source)


def parse_index_list(text: str, source: str = None) -> list[int]:
    """Parses "6,16,25" into [6, 16, 25] (1-based row indices)."""
    try:
        indices = [int(item) for item in text.split(",") if item.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse '{text}' as a comma separated list of row indices", source=source)
    if any(index < 1 for index in indices):
        raise ConfigError(f"row indices are 1-based, got {indices}", source=source)
    return indices


def as_vector(values) -> np.ndarray:
    """Returns a 1-d float array from a Theta, a sequence or an array."""
    if hasattr(values, "to_vector"):
        return values.to_vector()
    return np.atleast_1d(np.asarray(values, dtype=float))


def file_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(Path(path), "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
