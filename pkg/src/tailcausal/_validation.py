"""Input validation helpers shared by the estimators and pipeline functions."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_matrix(X, name: str = "X", *, min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """Finite 2-D float array with at least ``min_rows`` rows and ``min_cols`` columns."""
    try:
        arr = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True,
                          ensure_min_samples=min_rows, ensure_min_features=min_cols,
                          input_name=name)
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None
    return np.ascontiguousarray(arr)


def check_vector(x, name: str = "x", *, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_len:
        raise ValueError(f"{name} needs at least {min_len} entries")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_beta(beta) -> float:
    if not isinstance(beta, numbers.Real) or not 0.0 < float(beta) < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta!r}")
    return float(beta)


def check_open_unit(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not 0.0 < float(value) < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def check_positive(value, name: str, *, allow_zero: bool = False) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = "non-negative" if allow_zero else "positive"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_int(value, name: str, *, minimum: int) -> int:
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
