"""Input validation for the estimator interface."""

import numpy as np
from sklearn.utils.validation import check_array


def check_sequence(x) -> np.ndarray:
    """A single observed bit sequence as a 1-D int8 array (possibly empty)."""
    if x is None:
        return np.zeros(0, dtype=np.int8)
    arr = np.asarray(x)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int8)
    arr = check_array(arr, ensure_2d=False, dtype=None)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D bit sequence, got shape {arr.shape}")
    return _binary(arr)


def check_histories(X) -> np.ndarray:
    """A batch of equal-length histories as an ``(n_samples, length)`` array."""
    X = check_array(X, dtype=None, ensure_min_features=0)
    return _binary(X)


def _binary(arr):
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit arrays may only contain 0 and 1")
    return arr.astype(np.int8)
