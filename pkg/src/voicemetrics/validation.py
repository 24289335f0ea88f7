"""Input validation helpers shared by the estimator-style classes."""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X", min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """Coerce to a finite 2-D float64 array with minimum shape."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows or X.shape[1] < min_cols:
        raise ValueError(
            f"{name} must be at least {min_rows}x{min_cols}, got {X.shape[0]}x{X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_vector(y, name: str = "y", min_len: int = 1) -> np.ndarray:
    """Coerce to a finite 1-D float64 array with minimum length."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {y.shape}")
    if len(y) < min_len:
        raise ValueError(f"{name} must have at least {min_len} entries, got {len(y)}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


def check_same_length(a, b, name_a: str = "X", name_b: str = "y") -> None:
    if len(a) != len(b):
        raise ValueError(f"{name_a} and {name_b} disagree on length: {len(a)} vs {len(b)}")
