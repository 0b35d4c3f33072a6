"""RBF-kernel soft-margin SVM trained by sequential minimal optimization.

Working-set selection takes the maximal violating pair (first-order rule);
the decision function is ``sum_i alpha_i y_i k(x_i, x) - rho``.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ._labels import binary_labels, check_xy

log = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(X, Y, gamma):
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    C: float
    gamma: float
    classes: np.ndarray
    iterations: int = 0

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    score = decision_function

    def predict(self, X):
        return self.classes[(self.decision_function(X) > 0).astype(np.int64)]

    def to_dict(self):
        return {"kind": "svm", "support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(), "bias": self.bias, "C": self.C,
                "gamma": self.gamma, "classes": self.classes.tolist(),
                "iterations": self.iterations}

    @classmethod
    def from_dict(cls, d):
        sv = np.array(d["support_vectors"], dtype=float)
        return cls(sv.reshape(len(d["dual_coef"]), -1) if sv.size else sv.reshape(0, 0),
                   np.array(d["dual_coef"], dtype=float), float(d["bias"]), float(d["C"]),
                   float(d["gamma"]), np.array(d["classes"]), int(d["iterations"]))


def train_svm(X, y, C=0.1, gamma=0.001, tol=1e-3, max_iter=10_000):
    X = check_xy(X, y)
    classes, y01 = binary_labels(y)
    if not (C > 0 and gamma > 0):
        raise ValueError("C and gamma must be positive")
    s = np.where(y01 == 1, 1.0, -1.0)
    n = X.shape[0]
    K = rbf_kernel(X, X, gamma)
    Q = K * s[:, None] * s[None, :]
    diag = np.diag(Q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)

    it = 0
    while True:
        up = ((s > 0) & (alpha < C)) | ((s < 0) & (alpha > 0))
        low = ((s > 0) & (alpha > 0)) | ((s < 0) & (alpha < C))
        score = -s * grad
        su = np.where(up, score, -np.inf)
        sl = np.where(low, score, np.inf)
        i = int(np.argmax(su))
        j = int(np.argmin(sl))
        if su[i] - sl[j] < tol:
            break
        if it >= max_iter:
            log.warning("SMO stopped at the iteration ceiling (%d) with gap %.3g",
                        max_iter, su[i] - sl[j])
            break
        it += 1
        old_i, old_j = alpha[i], alpha[j]
        if s[i] != s[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Q[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Q[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        grad += Q[:, i] * (ai - old_i) + Q[:, j] * (aj - old_j)
        alpha[i], alpha[j] = ai, aj

    # rho from free vectors, else midpoint of the feasible interval
    yg = s * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(yg[free].mean())
    else:
        ub = np.inf
        lb = -np.inf
        at_upper = alpha >= C
        at_lower = alpha <= 0
        for sign in (1.0, -1.0):
            m = s == sign
            lo_side = m & ((at_upper & (sign < 0)) | (at_lower & (sign > 0)))
            hi_side = m & ((at_upper & (sign > 0)) | (at_lower & (sign < 0)))
            if np.any(lo_side):
                ub = min(ub, yg[lo_side].min())
            if np.any(hi_side):
                lb = max(lb, yg[hi_side].max())
        rho = float((ub + lb) / 2.0) if np.isfinite(ub + lb) else float(
            ub if np.isfinite(ub) else lb)
    sv = alpha > 0
    return SvmModel(X[sv].copy(), (alpha * s)[sv], -rho, float(C), float(gamma), classes, it)
