"""Utility functions shared across the package."""

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


def make_rng(value: int | None = None) -> np.random.Generator:
    """Create a NumPy random generator for reproducible results.

    Args:
        value: Seed value (None draws fresh entropy)

    Returns:
        New ``numpy.random.Generator``
    """
    return np.random.default_rng(value)


def as_vector(values: object, name: str = "vector") -> FloatArray:
    """Convert input to a finite one-dimensional float64 array.

    Args:
        values: Array-like input
        name: Name used in error messages

    Returns:
        Float64 array (a copy when the input had to be converted)
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def constrain(value: float, min_val: float, max_val: float) -> float:
    """Constrain a value to a closed range.

    Args:
        value: Value to constrain
        min_val: Minimum value
        max_val: Maximum value (may be ``inf``)

    Returns:
        Constrained value
    """
    return min(max(value, min_val), max_val)


def weighted_geometric_mean(values: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted geometric mean of positive values.

    Zero weights drop their factor entirely, so an absent or zero value with
    weight 0 does not affect the result.

    Args:
        values: Positive values
        weights: Non-negative exponents, one per value

    Returns:
        Product of ``value ** weight``
    """
    result = 1.0
    for value, weight in zip(values, weights, strict=True):
        if weight == 0.0:
            continue
        result *= value**weight
    return result


def format_float(value: float | None) -> str:
    """Format a float with 17 significant digits for lossless CSV output."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.17g}"


def parse_float(text: str) -> float | None:
    """Inverse of :func:`format_float`."""
    if text == "":
        return None
    return float(text)
