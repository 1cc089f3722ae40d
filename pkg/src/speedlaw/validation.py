"""Small argument-checking helpers shared across the package."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import EmptyInput, InvalidParameters


def check_scalar(
    value,
    name: str,
    *,
    minimum: float | None = None,
    maximum: float | None = None,
    include_min: bool = True,
    include_max: bool = True,
    finite: bool = True,
) -> float:
    """Validate a real scalar and return it as a float."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InvalidParameters(f"{name} must be a real number, got {value!r}")
    if finite and not math.isfinite(x):
        raise InvalidParameters(f"{name} must be finite, got {x}")
    if minimum is not None:
        if include_min:
            if x < minimum:
                raise InvalidParameters(f"{name} must be >= {minimum}, got {x}")
        elif x <= minimum:
            raise InvalidParameters(f"{name} must be > {minimum}, got {x}")
    if maximum is not None:
        if include_max:
            if x > maximum:
                raise InvalidParameters(f"{name} must be <= {maximum}, got {x}")
        elif x >= maximum:
            raise InvalidParameters(f"{name} must be < {maximum}, got {x}")
    return x


def check_int(value, name: str, *, minimum: int | None = None) -> int:
    """Validate an integer argument."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidParameters(f"{name} must be an integer, got {value!r}")
    v = int(value)
    if minimum is not None and v < minimum:
        raise InvalidParameters(f"{name} must be >= {minimum}, got {v}")
    return v


def check_choice(value, name: str, options: Sequence[str]) -> str:
    """Validate a string option."""
    if value not in options:
        raise InvalidParameters(
            f"{name} must be one of {sorted(options)}, got {value!r}"
        )
    return value


def as_float_array(values, name: str, *, allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 1-d float64 array with finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidParameters(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise EmptyInput(f"{name} is empty")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidParameters(f"{name} contains non-finite entries")
    return arr
