"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_rng(seed_or_rng) -> np.random.Generator:
    """Coerce an int seed (or an existing Generator) into a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def check_bit_vector(x, D: int | None = None) -> np.ndarray:
    """Validate a 1-D {0,1} vector and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if D is not None and x.shape[0] != D:
        raise ValueError(f"expected length {D}, got {x.shape[0]}")
    if not np.all((x == 0.0) | (x == 1.0)):
        raise ValueError("vector entries must be 0 or 1")
    return x


def check_binary_matrix(X, D: int | None = None) -> np.ndarray:
    """Validate a 2-D {0,1} matrix and return it as float64."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if D is not None and X.shape[1] != D:
        raise ValueError(f"expected {D} columns, got {X.shape[1]}")
    if not np.all((X == 0.0) | (X == 1.0)):
        raise ValueError("matrix entries must be 0 or 1")
    return X


def check_partial_binary_matrix(X) -> np.ndarray:
    """Validate a 2-D matrix of {0,1,NaN} (NaN marks a missing entry)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    observed = ~np.isnan(X)
    vals = X[observed]
    if not np.all((vals == 0.0) | (vals == 1.0)):
        raise ValueError("observed entries must be 0 or 1")
    return X


def check_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    """Raise if any entry is NaN or infinite."""
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a
