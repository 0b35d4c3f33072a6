"""Compiled log-domain Sinkhorn sweeps."""

import numpy as np
from numba import njit


@njit(cache=True)
def _lse_row(M, v, i, eps):
    m = M.shape[1]
    mx = -np.inf
    for j in range(m):
        z = (v[j] - M[i, j]) / eps
        if z > mx:
            mx = z
    s = 0.0
    for j in range(m):
        s += np.exp((v[j] - M[i, j]) / eps - mx)
    return mx + np.log(s)


@njit(cache=True)
def _lse_col(M, u, j, eps):
    n = M.shape[0]
    mx = -np.inf
    for i in range(n):
        z = (u[i] - M[i, j]) / eps
        if z > mx:
            mx = z
    s = 0.0
    for i in range(n):
        s += np.exp((u[i] - M[i, j]) / eps - mx)
    return mx + np.log(s)


@njit(cache=True)
def marginal_error(M, a, b, f, g, eps):
    """Max absolute deviation of the plan's row and column sums from ``a``, ``b``."""
    n, m = M.shape
    err = 0.0
    for i in range(n):
        d = abs(np.exp(_lse_row(M, g, i, eps) + f[i] / eps) - a[i])
        if d > err:
            err = d
    for j in range(m):
        d = abs(np.exp(_lse_col(M, f, j, eps) + g[j] / eps) - b[j])
        if d > err:
            err = d
    return err


@njit(cache=True)
def sinkhorn_sweeps(M, a, b, f, g, eps, max_iter, tol):
    """Alternate exact row and column updates of the dual potentials in place.

    Returns ``(iterations, row_error)``; column sums are exact after every
    sweep so only the row error is tracked.
    """
    n, m = M.shape
    log_a = np.log(a)
    log_b = np.log(b)
    err = np.inf
    it = 0
    while it < max_iter:
        for i in range(n):
            f[i] = eps * log_a[i] - eps * _lse_row(M, g, i, eps)
        for j in range(m):
            g[j] = eps * log_b[j] - eps * _lse_col(M, f, j, eps)
        it += 1
        err = 0.0
        for i in range(n):
            d = abs(np.exp(_lse_row(M, g, i, eps) + f[i] / eps) - a[i])
            if d > err:
                err = d
        if err < tol:
            break
    return it, err
