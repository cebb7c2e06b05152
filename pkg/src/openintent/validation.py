"""Input validation helpers shared across the package."""

import numpy as np


def check_feature_matrix(x, dim=None, name="x"):
    """Coerce to a 2-D float64 array with finite entries.

    Raises ValueError on wrong rank, non-finite entries, or a dimension
    mismatch when ``dim`` is given.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"{name} has {x.shape[1]} columns, expected {dim}")
    return x


def check_feature_vector(v, name="v"):
    """Coerce to a 1-D float64 array with finite entries."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def check_label_indices(y, num_classes, n_rows=None, name="labels"):
    """Coerce to an int array of class indices in ``[0, num_classes)``."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        as_int = y.astype(np.int64)
        if not np.array_equal(as_int, y):
            raise ValueError(f"{name} must be integer class indices")
        y = as_int
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise ValueError(
            f"{name} must lie in [0, {num_classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    if n_rows is not None and y.shape[0] != n_rows:
        raise ValueError(f"{name} has {y.shape[0]} entries, expected {n_rows}")
    return y


def check_probability_vector(p, name="probabilities", tol=1e-6):
    """Validate a vector on the probability simplex (sums to 1 within tol)."""
    p = check_feature_vector(p, name=name)
    if p.size == 0:
        raise ValueError(f"{name} is empty")
    if p.min() < -tol:
        raise ValueError(f"{name} has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} sums to {total}, not 1 within {tol}")
    return p


def check_positive(value, name):
    """Require a strictly positive scalar."""
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value
