"""Two-sample and paired t-tests with explicit zero-variance handling."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateInputError

# floor for a (numerically) zero variance term so t stays finite
VARIANCE_EPS = 1e-12


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float


def _two_sided_p(t, df):
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


def welch_ttest(a, b):
    """Welch's unequal-variance t-test between two 1-D samples.

    Returns ``TTestResult``; swapping ``a`` and ``b`` negates ``t`` only.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise DegenerateInputError("each group needs at least 2 samples")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = a.mean() - b.mean()
    se2 = va / na + vb / nb
    if se2 <= VARIANCE_EPS:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, float(na + nb - 2))
        se2 = VARIANCE_EPS
        df = float(na + nb - 2)
    else:
        df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    t = float(diff / np.sqrt(se2))
    return TTestResult(t, _two_sided_p(t, df), float(df))


def paired_ttest(a, b):
    """Paired t-test on equal-length score vectors ``a`` and ``b`` (t > 0 when a > b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DegenerateInputError("paired samples must be 1-D and of equal length")
    n = a.size
    if n < 2:
        raise DegenerateInputError("paired t-test needs at least 2 pairs")
    d = a - b
    mean = d.mean()
    var = d.var(ddof=1)
    if var <= VARIANCE_EPS:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, float(n - 1))
        var = VARIANCE_EPS
    t = float(mean / np.sqrt(var / n))
    return TTestResult(t, _two_sided_p(t, n - 1), float(n - 1))
