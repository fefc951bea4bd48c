"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .errors import PreconditionError


def check_path(X, min_nodes=2):
    """Validate a sampled path: time along axis 0, one column per component."""
    X = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < min_nodes:
        raise PreconditionError(f"need at least {min_nodes} time nodes, got {X.shape[0]}")
    return X


def check_times(t):
    """Validate a time column: 1-D (or ``(n, 1)``), finite, strictly increasing."""
    t = check_array(t, ensure_2d=False, dtype=np.float64)
    if t.ndim == 2:
        if t.shape[1] != 1:
            raise PreconditionError("time input must have a single column")
        t = t[:, 0]
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise PreconditionError("times must be strictly increasing")
    return t


def check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise PreconditionError(f"{name} must be a positive number, got {value!r}")
    return float(value)
