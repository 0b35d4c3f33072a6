"""Classification metrics on a 0-100 scale."""

import numpy as np
from scipy.stats import rankdata

from ..errors import DegenerateInputError


def macro_f1(y_true, y_pred, labels=(0, 1)):
    """Unweighted mean of the per-class F1 scores (0/0 counts as 0), times 100."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.size == 0:
        raise DegenerateInputError("macro_f1 of an empty set")
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred lengths differ")
    scores = []
    for c in labels:
        tp = np.sum((y_true == c) & (y_pred == c))
        denom = np.sum(y_true == c) + np.sum(y_pred == c)
        scores.append(2.0 * tp / denom if denom else 0.0)
    return 100.0 * sum(scores) / len(scores)


def auroc(y_true, scores, positive=1):
    """Mann-Whitney statistic with average ranks for ties, times 100."""
    y_true = np.asarray(y_true).ravel()
    scores = np.asarray(scores, dtype=float).ravel()
    if y_true.shape != scores.shape:
        raise ValueError("y_true and scores lengths differ")
    pos = y_true == positive
    n1 = int(pos.sum())
    n0 = y_true.size - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateInputError("AUROC needs both classes in the ground truth")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return 100.0 * u / (n1 * n0)
