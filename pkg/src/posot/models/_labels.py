import numpy as np

from ..errors import DegenerateInputError


def binary_labels(y):
    """Sorted class values and the 0/1 encoding (second class is positive)."""
    y = np.asarray(y).ravel()
    if y.size == 0:
        raise DegenerateInputError("empty training set")
    classes = np.unique(y)
    if classes.size != 2:
        raise DegenerateInputError(
            f"binary classification needs exactly two classes, got {classes.size}")
    return classes, (y == classes[1]).astype(np.int64)


def check_xy(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if X.shape[0] != np.asarray(y).ravel().shape[0]:
        raise ValueError("X and y lengths differ")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or Inf")
    return X
