"""Discrete optimal transport: cost matrices, exact EMD and log-domain Sinkhorn."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, DegenerateInputError
from ._netsimplex import STATUS_MAX_ITER, STATUS_OPTIMAL, network_simplex
from ._sinkhorn import marginal_error, sinkhorn_sweeps

PLAN_FORMAT = "posot.transport_plan"
PLAN_VERSION = 1

EMD_MAX_ITER = 100_000
SINKHORN_MAX_ITER = 10_000
SINKHORN_TOL = 1e-6
WEIGHT_TOL = 1e-9
# plain sweeps between Newton polish steps
SWEEP_BLOCK = 200
# dense Newton solve only below this many potentials
NEWTON_MAX_DIM = 2000


@dataclass(frozen=True)
class DiscreteDistribution:
    """Weighted point cloud; weights are normalized to sum to one."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        if support.ndim == 1:
            support = support[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if support.shape[0] < 1:
            raise DegenerateInputError("distribution needs at least one atom")
        if weights.shape[0] != support.shape[0]:
            raise ValueError("one weight per support point required")
        if not np.all(np.isfinite(support)):
            raise ValueError("support contains NaN or Inf")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", normalize_weights(weights))

    @classmethod
    def uniform(cls, support):
        support = np.asarray(support, dtype=float)
        n = support.shape[0]
        return cls(support, np.full(n, 1.0 / n) if n else np.zeros(0))

    def __len__(self):
        return self.support.shape[0]


@dataclass(frozen=True)
class CostMatrix:
    values: np.ndarray
    metric: str = "sqeuclidean"

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class TransportPlan:
    """A coupling between two discrete marginals plus how it was obtained."""

    coupling: np.ndarray
    source_marginal: np.ndarray
    target_marginal: np.ndarray
    objective_value: float
    solver: str
    regularization: float | None = None
    iterations: int = 0
    settings: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.coupling.shape

    def marginal_errors(self):
        """Max absolute row and column marginal violations."""
        rows = np.abs(self.coupling.sum(axis=1) - self.source_marginal).max()
        cols = np.abs(self.coupling.sum(axis=0) - self.target_marginal).max()
        return float(rows), float(cols)

    def to_dict(self):
        return {
            "format": PLAN_FORMAT,
            "version": PLAN_VERSION,
            "solver": self.solver,
            "regularization": self.regularization,
            "objective_value": float(self.objective_value),
            "iterations": int(self.iterations),
            "settings": dict(self.settings),
            "source_marginal": self.source_marginal.tolist(),
            "target_marginal": self.target_marginal.tolist(),
            "coupling": self.coupling.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != PLAN_FORMAT or d.get("version") != PLAN_VERSION:
            raise ValueError("not a version-1 transport plan document")
        n = len(d["source_marginal"])
        m = len(d["target_marginal"])
        return cls(
            coupling=np.array(d["coupling"], dtype=float).reshape(n, m),
            source_marginal=np.array(d["source_marginal"], dtype=float),
            target_marginal=np.array(d["target_marginal"], dtype=float),
            objective_value=float(d["objective_value"]),
            solver=d["solver"],
            regularization=d["regularization"],
            iterations=int(d["iterations"]),
            settings=dict(d["settings"]),
        )


def normalize_weights(w):
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0:
        raise DegenerateInputError("empty weight vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise DegenerateInputError("weights sum to zero and cannot be normalized")
    return w / total


def _weights(x, n=None):
    if isinstance(x, DiscreteDistribution):
        return x.weights
    if x is None:
        return np.full(n, 1.0 / n)
    return normalize_weights(x)


def _values(C):
    return C.values if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)


def cost_matrix(X, Y):
    """Squared Euclidean cost ``C[i, j] = ||X[i] - Y[j]||^2``."""
    X = np.asarray(X.support if isinstance(X, DiscreteDistribution) else X, dtype=float)
    Y = np.asarray(Y.support if isinstance(Y, DiscreteDistribution) else Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("points contain NaN or Inf")
    diff = X[:, None, :] - Y[None, :, :]
    return CostMatrix(np.einsum("ijk,ijk->ij", diff, diff))


def transport_cost(plan, C):
    """Total cost ``<coupling, C>``."""
    G = plan.coupling if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    M = _values(C)
    if G.shape != M.shape:
        raise ValueError(f"shape mismatch: plan {G.shape} vs cost {M.shape}")
    return float(np.sum(G * M))


def _check_problem(a, b, M):
    if M.ndim != 2 or M.shape != (a.size, b.size):
        raise ValueError(f"cost shape {M.shape} does not match marginals ({a.size}, {b.size})")
    if not np.all(np.isfinite(M)):
        raise ValueError("cost matrix contains NaN or Inf")


def solve_emd(a, b, C, max_iter=EMD_MAX_ITER):
    """Exact optimal transport by network simplex.

    ``a`` and ``b`` may be ``DiscreteDistribution`` objects, weight arrays or
    ``None`` (uniform). Zero-weight atoms are removed before solving and
    restored as zero rows/columns of the coupling.
    """
    M = _values(C)
    a = _weights(a, M.shape[0])
    b = _weights(b, M.shape[1])
    _check_problem(a, b, M)
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    a_r = a[rows] / a[rows].sum()
    b_r = b[cols] / b[cols].sum()
    M_r = np.ascontiguousarray(M[np.ix_(rows, cols)])
    G_r, _, _, iters, status = network_simplex(a_r, b_r, M_r, int(max_iter), 1e-12)
    if status == STATUS_MAX_ITER:
        raise ConvergenceError(
            f"network simplex hit the iteration ceiling ({iters})", iterations=iters)
    if status != STATUS_OPTIMAL:
        raise ConvergenceError("network simplex reported an unbounded cycle", iterations=iters)
    G = np.zeros(M.shape)
    G[np.ix_(rows, cols)] = G_r
    return TransportPlan(
        coupling=G,
        source_marginal=a,
        target_marginal=b,
        objective_value=float(np.sum(G * M)),
        solver="EMD",
        iterations=int(iters),
        settings={"max_iter": int(max_iter)},
    )


def normalize_cost(M, how):
    if how is None:
        return M
    if how == "max":
        scale = M.max()
    elif how == "mean":
        scale = M.mean()
    elif how == "median":
        scale = np.median(M)
    else:
        raise ValueError(f"unknown cost normalization {how!r}")
    return M / scale if scale > 0 else M


def _dual_value(M, a, b, f, g, eps):
    # an overshooting trial step overflows to -inf, which the line search rejects
    with np.errstate(over="ignore"):
        return float(a @ f + b @ g - eps * np.exp((f[:, None] + g[None, :] - M) / eps).sum())


def _newton_step(M, a, b, f, g, eps):
    """One damped Newton ascent step on the entropic dual (last ``g`` pinned)."""
    P = np.exp((f[:, None] + g[None, :] - M) / eps)
    r = a - P.sum(axis=1)
    c = b - P.sum(axis=0)
    n, m = M.shape
    H = np.zeros((n + m - 1, n + m - 1))
    H[:n, :n] = np.diag(P.sum(axis=1))
    H[n:, n:] = np.diag(P.sum(axis=0)[:-1])
    H[:n, n:] = P[:, :-1]
    H[n:, :n] = P[:, :-1].T
    H[np.diag_indices_from(H)] += 1e-14 * np.trace(H) / H.shape[0]
    grad = np.concatenate([r, c[:-1]])
    try:
        step = eps * np.linalg.solve(H, grad)
    except np.linalg.LinAlgError:
        step = eps * np.linalg.lstsq(H, grad, rcond=None)[0]
    base = _dual_value(M, a, b, f, g, eps)
    slope = float(grad @ step)
    t = 1.0
    while t > 1e-10:
        f_new = f + t * step[:n]
        g_new = g.copy()
        g_new[:-1] += t * step[n:]
        if _dual_value(M, a, b, f_new, g_new, eps) >= base + 1e-4 * t * slope:
            return f_new, g_new
        t *= 0.5
    return f, g


def solve_sinkhorn(a, b, C, reg=3.0, max_iter=SINKHORN_MAX_ITER, tol=SINKHORN_TOL,
                   cost_normalization=None, eps_scaling=True):
    """Entropic OT, ``min <G, C> + reg * sum G log G``, by log-domain Sinkhorn.

    With ``eps_scaling`` the regularization is annealed geometrically from
    the cost spread down to ``reg`` with warm-started potentials. If plain
    sweeps at the final ``reg`` stall (slow mixing when the plan is close
    to a permutation), damped Newton steps on the same dual finish the
    job; the fixed point is the same. Every sweep or Newton step counts
    toward ``max_iter``. The stopping rule is the max absolute marginal
    error. ``objective_value`` is ``<G, C>`` on the unnormalized cost.
    """
    if not reg > 0:
        raise ValueError(f"regularization must be positive, got {reg}")
    M_raw = _values(C)
    a = _weights(a, M_raw.shape[0])
    b = _weights(b, M_raw.shape[1])
    _check_problem(a, b, M_raw)
    M = normalize_cost(M_raw, cost_normalization)

    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    a_r = a[rows] / a[rows].sum()
    b_r = b[cols] / b[cols].sum()
    M_r = np.ascontiguousarray(M[np.ix_(rows, cols)])

    schedule = []
    if eps_scaling:
        e = float(M_r.max() - M_r.min())
        while e > 2.0 * reg:
            schedule.append(e)
            e *= 0.5
    f = np.zeros(a_r.size)
    g = np.zeros(b_r.size)
    total = 0
    for eps in schedule:
        it, _ = sinkhorn_sweeps(M_r, a_r, b_r, f, g, eps, min(100, max_iter - total), 1e-4)
        total += it

    newton_steps = 0
    err = marginal_error(M_r, a_r, b_r, f, g, reg)
    while err >= tol and total < max_iter:
        it, err = sinkhorn_sweeps(M_r, a_r, b_r, f, g, reg,
                                  min(SWEEP_BLOCK, max_iter - total), tol)
        total += it
        if err < tol or total >= max_iter:
            break
        if M_r.shape[0] + M_r.shape[1] <= NEWTON_MAX_DIM:
            f, g = _newton_step(M_r, a_r, b_r, f, g, reg)
            newton_steps += 1
            total += 1
            err = marginal_error(M_r, a_r, b_r, f, g, reg)
    err = marginal_error(M_r, a_r, b_r, f, g, reg)
    if not err < tol:
        raise ConvergenceError(
            f"Sinkhorn did not reach marginal tolerance {tol:g} in {total} iterations "
            f"(residual {err:.3g})", iterations=total, residual=float(err))
    G_r = np.exp((f[:, None] + g[None, :] - M_r) / reg)
    G = np.zeros(M_raw.shape)
    G[np.ix_(rows, cols)] = G_r
    return TransportPlan(
        coupling=G,
        source_marginal=a,
        target_marginal=b,
        objective_value=float(np.sum(G * M_raw)),
        solver="EMD-R",
        regularization=float(reg),
        iterations=total,
        settings={"max_iter": int(max_iter), "tol": float(tol),
                  "cost_normalization": cost_normalization,
                  "eps_scaling": bool(eps_scaling), "newton_steps": newton_steps,
                  "marginal_error": float(err)},
    )
