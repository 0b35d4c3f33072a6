"""Feature-space transport maps fitted from OT plans.

Three variants share one ``AdaptationModel`` container:

* ``BarycentricEMD`` / ``BarycentricSinkhorn``: each training source point is
  sent to the plan-weighted mean of the target support. Unseen points reuse
  the displacement of their nearest training source points.
* ``KernelMap``: a Gaussian-kernel expansion ``f(x) = sum_i alpha_i k(x, x_i)``
  fitted jointly with the coupling by alternating minimization.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from ..errors import DegenerateInputError
from .solvers import TransportPlan, cost_matrix, solve_emd, solve_sinkhorn

MODEL_FORMAT = "posot.adaptation_model"
MODEL_VERSION = 1

VARIANTS = ("BarycentricEMD", "BarycentricSinkhorn", "KernelMap")
METHOD_TO_VARIANT = {"emd": "BarycentricEMD", "sinkhorn": "BarycentricSinkhorn",
                     "gaussian": "KernelMap"}

KERNEL_RIDGE = 1e-6


@dataclass(frozen=True)
class AdaptationModel:
    """A fitted map from source feature space onto the target support."""

    variant: str
    Xs: np.ndarray
    Xt: np.ndarray
    plan: TransportPlan | None = None
    alpha: np.ndarray | None = None
    sigma: float | None = None
    mu: float | None = None
    k_oos: int = 1
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.Xs.ndim != 2 or self.Xt.ndim != 2 or self.Xs.shape[1] != self.Xt.shape[1]:
            raise ValueError("source and target supports must be 2-D with equal dimension")
        if self.k_oos < 1:
            raise ValueError("k_oos must be at least 1")
        if self.variant == "KernelMap":
            if self.alpha is None or self.sigma is None:
                raise ValueError("KernelMap needs alpha and sigma")
        elif self.plan is None:
            raise ValueError(f"{self.variant} needs a transport plan")
        elif self.plan.shape != (self.Xs.shape[0], self.Xt.shape[0]):
            raise ValueError("plan shape does not match the supports")

    @property
    def dim(self):
        return self.Xs.shape[1]

    @property
    def objective_value(self):
        return self.plan.objective_value if self.plan is not None else float("nan")

    def source_images(self):
        """Images of the training source points (rows of ``Xs``)."""
        if self.variant == "KernelMap":
            return _gaussian_kernel(self.Xs, self.Xs, self.sigma) @ self.alpha
        G = self.plan.coupling
        mass = G.sum(axis=1)
        out = np.full(self.Xs.shape, np.nan)
        ok = mass > 0
        out[ok] = (G[ok] @ self.Xt) / mass[ok, None]
        return out

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "variant": self.variant,
            "Xs": self.Xs.tolist(),
            "Xt": self.Xt.tolist(),
            "plan": None if self.plan is None else self.plan.to_dict(),
            "alpha": None if self.alpha is None else self.alpha.tolist(),
            "sigma": self.sigma,
            "mu": self.mu,
            "k_oos": self.k_oos,
            "settings": dict(self.settings),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a version-1 adaptation model document")
        dim = len(d["Xs"][0]) if d["Xs"] else 0
        return cls(
            variant=d["variant"],
            Xs=np.array(d["Xs"], dtype=float).reshape(-1, dim),
            Xt=np.array(d["Xt"], dtype=float).reshape(-1, dim),
            plan=None if d["plan"] is None else TransportPlan.from_dict(d["plan"]),
            alpha=None if d["alpha"] is None else np.array(d["alpha"], dtype=float).reshape(-1, dim),
            sigma=d["sigma"],
            mu=d["mu"],
            k_oos=int(d["k_oos"]),
            settings=dict(d["settings"]),
        )


def _points(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DegenerateInputError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf")
    return X


def fit_barycentric(Xs, Xt, method="emd", reg=3.0, a=None, b=None, k_oos=1, **solver_kw):
    """Solve OT between the clouds and keep the plan for barycentric mapping."""
    Xs = _points(Xs, "Xs")
    Xt = _points(Xt, "Xt")
    C = cost_matrix(Xs, Xt)
    if method == "emd":
        plan = solve_emd(a, b, C, **solver_kw)
    elif method == "sinkhorn":
        plan = solve_sinkhorn(a, b, C, reg=reg, **solver_kw)
    else:
        raise ValueError(f"unknown barycentric method {method!r}")
    return AdaptationModel(METHOD_TO_VARIANT[method], Xs, Xt, plan=plan, k_oos=k_oos)


def median_bandwidth(X):
    """Median pairwise Euclidean distance; 1.0 when every point coincides."""
    if X.shape[0] < 2:
        return 1.0
    s = float(np.median(pdist(X)))
    return s if s > 0 else 1.0


def _gaussian_kernel(X, Y, sigma):
    return np.exp(-cost_matrix(X, Y).values / (2.0 * sigma * sigma))


def fit_gaussian_mapping(Xs, Xt, mu=1.0, max_iter=20, tol=1e-5, sigma=None,
                         ridge=KERNEL_RIDGE, k_oos=1):
    """Jointly fit a coupling and a Gaussian-kernel map ``f`` with ``f(Xs) ~ Xt``.

    Starting from the plain EMD coupling, alternate

    * map step: kernel ridge regression of ``f`` onto the barycentric targets
      ``diag(1/a) G Xt``;
    * plan step: exact EMD under ``C(f(Xs), Xt) / a_i + mu * C(Xs, Xt)``.

    The plan-step cost upper-bounds the squared fit residual by convexity and
    is tight at permutation plans, so each step does not increase the joint
    objective. Stops when the images move by less than ``tol`` (max norm).
    """
    Xs = _points(Xs, "Xs")
    Xt = _points(Xt, "Xt")
    if Xs.shape[1] != Xt.shape[1]:
        raise ValueError(f"dimension mismatch: {Xs.shape[1]} vs {Xt.shape[1]}")
    if not mu >= 0:
        raise ValueError("mu must be nonnegative")
    n = Xs.shape[0]
    a = np.full(n, 1.0 / n)
    sigma = median_bandwidth(Xs) if sigma is None else float(sigma)
    K = _gaussian_kernel(Xs, Xs, sigma)
    system = K + ridge * np.eye(n)
    if np.linalg.cond(system) > 1e14:
        raise np.linalg.LinAlgError(
            "kernel system is numerically singular; increase the ridge term")
    M0 = cost_matrix(Xs, Xt).values

    plan = solve_emd(a, None, M0)
    F = None
    alpha = None
    change = np.inf
    it = 0
    while it < max_iter:
        it += 1
        targets = (plan.coupling @ Xt) / a[:, None]
        alpha = np.linalg.solve(system, targets)
        F_new = K @ alpha
        change = np.inf if F is None else float(np.abs(F_new - F).max())
        F = F_new
        if change < tol:
            break
        M = cost_matrix(F, Xt).values / (n * a[:, None]) + mu * M0
        plan = solve_emd(a, None, M)
    change = change if np.isfinite(change) else None
    plan = TransportPlan(
        coupling=plan.coupling, source_marginal=plan.source_marginal,
        target_marginal=plan.target_marginal,
        objective_value=float(np.sum(plan.coupling * M0)), solver="Gaussian",
        iterations=it,
        settings={"mu": float(mu), "max_iter": int(max_iter), "tol": float(tol),
                  "ridge": float(ridge), "final_change": change},
    )
    return AdaptationModel("KernelMap", Xs, Xt, plan=plan, alpha=alpha, sigma=sigma,
                           mu=float(mu), k_oos=k_oos,
                           settings={"iterations": it, "final_change": change})


def fit_adaptation(Xs, Xt, method, reg=3.0, mu=1.0, max_iter=20, tol=1e-5, k_oos=1,
                   cost_normalization=None):
    """Dispatch on ``method`` in {emd, sinkhorn, gaussian}.

    ``max_iter``/``tol`` govern the kernel-map alternation; ``reg`` and
    ``cost_normalization`` only affect the Sinkhorn variant.
    """
    if method == "gaussian":
        return fit_gaussian_mapping(Xs, Xt, mu=mu, max_iter=max_iter, tol=tol, k_oos=k_oos)
    if method == "emd":
        return fit_barycentric(Xs, Xt, method=method, k_oos=k_oos)
    if method == "sinkhorn":
        return fit_barycentric(Xs, Xt, method=method, reg=reg, k_oos=k_oos,
                               cost_normalization=cost_normalization)
    raise ValueError(f"unknown OT method {method!r}; expected emd, sinkhorn or gaussian")


def _match_rows(Xs, X):
    """Index of an exactly equal training row for each query, or -1."""
    lookup = {}
    for i, row in enumerate(Xs):
        lookup.setdefault(row.tobytes(), i)
    return np.array([lookup.get(row.tobytes(), -1) for row in X], dtype=np.int64)


def barycentric_map(model, X, in_sample=False):
    """Map points with ``model``.

    ``in_sample=True`` demands every row be a training source point and
    returns its barycentric image. Otherwise exact training points still get
    their in-sample image and any other point ``x`` moves by the mean
    displacement of its ``k_oos`` nearest training source points. The kernel
    variant evaluates ``f(x)`` directly.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.dim:
        raise ValueError(f"expected dimension {model.dim}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points contain NaN or Inf")
    idx = _match_rows(model.Xs, X)
    if in_sample and np.any(idx < 0):
        raise ValueError("in-sample mapping requested for a point outside the training support")

    if model.variant == "KernelMap":
        out = _gaussian_kernel(X, model.Xs, model.sigma) @ model.alpha
    else:
        images = model.source_images()
        used = np.unique(idx[idx >= 0])
        if used.size and np.any(np.isnan(images[used, 0])):
            raise DegenerateInputError("training point carries zero transport mass")
        out = np.empty_like(X)
        hit = idx >= 0
        out[hit] = images[idx[hit]]
        miss = np.flatnonzero(~hit)
        if miss.size:
            valid = np.flatnonzero(~np.isnan(images[:, 0]))
            k = min(model.k_oos, valid.size)
            D = cost_matrix(X[miss], model.Xs[valid]).values
            nn = np.argsort(D, axis=1, kind="stable")[:, :k]
            shift = (images[valid][nn] - model.Xs[valid][nn]).mean(axis=1)
            out[miss] = X[miss] + shift
    return out[0] if single else out


transform = barycentric_map
