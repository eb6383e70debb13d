"""Input checks shared by the estimators and the functional API."""
from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp
from sklearn.utils.validation import check_array


def check_fraction(name, value, *, low=0.0, high=1.0, low_open=True, high_open=True):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    lo_ok = value > low if low_open else value >= low
    hi_ok = value < high if high_open else value <= high
    if not (lo_ok and hi_ok and np.isfinite(value)):
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise ValueError(f"{name} must lie in {lb}{low}, {high}{rb}, got {value}")
    return value


def check_walk_length(walk_length):
    if isinstance(walk_length, bool) or not isinstance(walk_length, numbers.Integral) or walk_length < 1:
        raise ValueError(f"walk_length must be a positive integer, got {walk_length!r}")
    return int(walk_length)


def check_square(X, *, name="X", nonnegative=True) -> sp.csr_matrix:
    """Validate a square matrix (dense or sparse) and return it as float CSR."""
    X = check_array(X, accept_sparse=("csr", "csc", "coo"), dtype=np.float64, ensure_min_samples=1)
    if X.shape[0] != X.shape[1]:
        raise ValueError(f"{name} must be square, got shape {X.shape}")
    X = sp.csr_matrix(X)
    if nonnegative and X.nnz and X.data.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    return X
