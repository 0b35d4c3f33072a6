"""Training-set conditioning: robust scaling and SMOTE oversampling."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RobustScaler:
    """Per-dimension median and interquartile range (type-7 quantiles)."""

    median: np.ndarray
    iqr: np.ndarray

    @property
    def dim(self):
        return self.median.shape[0]

    def to_dict(self):
        return {"median": self.median.tolist(), "iqr": self.iqr.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["median"], dtype=float), np.array(d["iqr"], dtype=float))


def fit_robust_scaler(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DegenerateInputError("robust scaling needs at least 2 samples")
    q1, med, q3 = np.percentile(X, [25, 50, 75], axis=0, method="linear")
    return RobustScaler(median=med, iqr=np.maximum(q3 - q1, 0.0))


def apply_robust_scaler(s, X):
    """``(x - median) / iqr``; zero-IQR dimensions are only centered."""
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != s.dim:
        raise ValueError(f"expected {s.dim} features, got {X.shape[1]}")
    scale = np.where(s.iqr > 0, s.iqr, 1.0)
    out = (X - s.median) / scale
    return out[0] if squeeze else out


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 3
    target: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("SMOTE needs k >= 1")
        if self.target < 0:
            raise ValueError("SMOTE target count must be nonnegative")


def smote(minority, cfg):
    """Synthesize ``cfg.target - len(minority)`` points (none if already there).

    Each new point picks a base sample and one of its ``k`` nearest minority
    neighbours uniformly at random and lands at a uniform position on the
    segment between them. Returns ``(points, base_index, neighbor_index)``.
    """
    X = np.asarray(minority, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if cfg.target < 0:
        raise ValueError("SMOTE target count must be nonnegative")
    if n < 2:
        raise DegenerateInputError("SMOTE needs at least 2 minority samples")
    count = max(cfg.target - n, 0)
    k = cfg.k
    if k > n - 1:
        log.warning("SMOTE: only %d neighbours available, using k=%d instead of %d",
                    n - 1, n - 1, k)
        k = n - 1
    if count == 0:
        empty = np.zeros(0, dtype=np.int64)
        return np.zeros((0, X.shape[1])), empty, empty

    D = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(D, np.inf)
    neighbors = np.argsort(D, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(cfg.seed)
    base = rng.integers(0, n, size=count)
    pick = rng.integers(0, k, size=count)
    gap = rng.random(count)
    nn = neighbors[base, pick]
    points = X[base] + gap[:, None] * (X[nn] - X[base])
    return points, base, nn


def oversample(X, y, k=3, seed=0):
    """Balance a binary training pool by SMOTE on whichever class is smaller."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2 or counts[0] == counts[1]:
        return X, y
    minor = classes[np.argmin(counts)]
    if counts.min() < 2:
        log.warning("SMOTE skipped: minority class has a single sample")
        return X, y
    pts, _, _ = smote(X[y == minor], SmoteConfig(k=k, target=int(counts.max()), seed=seed))
    return (np.vstack([X, pts]),
            np.concatenate([y, np.full(pts.shape[0], minor, dtype=y.dtype)]))
