"""Synthetic bilingual POS-proportion corpus.

Target-language features are truncated Gaussians per class; source-language
features are an affine image ``A x + b`` of matched draws plus isotropic
noise. Subjects contribute several segments that share a subject-level draw.
Out-of-domain (healthy, single-speaker) pools are centred at the healthy
mean plus ``ood_shift``, a register offset shared by both languages. The
paired source pool holds translations of the target out-of-domain draws:
each is the affine image of its original after ``paired_noise`` jitter.
"""

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..corpus import FEATURE_TAGS
from ..errors import DegenerateInputError
from .data import BilingualData, FeatureTable

D = len(FEATURE_TAGS)
MAX_ROUNDS = 1000


@dataclass(frozen=True)
class SynthCorpusSpec:
    healthy_mean: tuple
    aphasic_mean: tuple
    healthy_cov: tuple  # variances (diagonal) or a full matrix
    aphasic_cov: tuple
    target_healthy: int = 42
    target_aphasic: int = 18
    source_healthy: int = 90
    source_aphasic: int = 150
    target_ood: int = 200
    source_ood: int = 200
    segments_per_subject: int = 3
    within_subject: float = 0.3
    A: tuple | None = None
    b: tuple = (0.0,) * D
    noise: float = 0.0
    paired: bool = False
    paired_noise: float = 0.0
    source_ood_accents: tuple | None = None  # (count NA, count other)
    accent_shift: tuple = (0.0,) * D
    ood_shift: tuple = (0.0,) * D
    target_language: str = "tgt"
    source_language: str = "src"
    seed: int = 0

    def __post_init__(self):
        problems = []
        for name in ("target_healthy", "target_aphasic", "source_healthy", "source_aphasic",
                     "target_ood", "source_ood"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.segments_per_subject < 1:
            problems.append("segments_per_subject must be >= 1")
        if not 0 <= self.within_subject <= 1:
            problems.append("within_subject must lie in [0, 1]")
        for name in ("noise", "paired_noise"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        for name in ("healthy_mean", "aphasic_mean", "b", "accent_shift", "ood_shift"):
            if np.asarray(getattr(self, name), dtype=float).shape != (D,):
                problems.append(f"{name} must have {D} entries")
        for name in ("healthy_cov", "aphasic_cov"):
            try:
                cov = _as_cov(getattr(self, name))
                if np.linalg.eigvalsh(cov).min() < -1e-12:
                    problems.append(f"{name} is not positive semidefinite")
            except ValueError as exc:
                problems.append(f"{name}: {exc}")
        if self.A is not None and np.asarray(self.A, dtype=float).shape != (D, D):
            problems.append(f"A must be {D}x{D}")
        if self.source_ood_accents is not None:
            acc = tuple(self.source_ood_accents)
            if len(acc) != 2 or min(acc) < 0 or sum(acc) != self.source_ood:
                problems.append("source_ood_accents must be two counts summing to source_ood")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self):
        return {k: _plain(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown synthetic spec keys: {', '.join(unknown)}")
        return cls(**{k: _freeze(v) for k, v in d.items()})

    def with_seed(self, seed):
        return SynthCorpusSpec(**{**{f.name: getattr(self, f.name) for f in fields(self)},
                                  "seed": int(seed)})


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def _as_cov(c):
    c = np.asarray(c, dtype=float)
    if c.shape == (D,):
        if np.any(c < 0):
            raise ValueError("variances must be nonnegative")
        return np.diag(c)
    if c.shape == (D, D):
        if not np.allclose(c, c.T):
            raise ValueError("covariance must be symmetric")
        return c
    raise ValueError(f"expected {D} variances or a {D}x{D} matrix")


def _cov_factor(cov):
    w, V = np.linalg.eigh(cov)
    return V * np.sqrt(np.clip(w, 0, None))


def _renormalize(X):
    X = np.clip(X, 0.0, 1.0)
    s = X.sum(axis=1, keepdims=True)
    return np.where(s > 1.0, X / np.where(s > 0, s, 1.0), X)


def _truncated(rng, mean, L, n):
    """``n`` draws of ``N(mean, L L^T)`` restricted to the unit cube."""
    out = np.empty((0, D))
    for _ in range(MAX_ROUNDS):
        if out.shape[0] >= n:
            break
        batch = mean + rng.standard_normal((max(n, 16), D)) @ L.T
        ok = np.all((batch >= 0) & (batch <= 1), axis=1)
        out = np.vstack([out, batch[ok]])
    if out.shape[0] < n:
        raise DegenerateInputError(
            "class distribution puts (almost) no mass inside [0, 1]; clipping is infeasible")
    return out[:n]


def _clinical_latent(rng, spec, mean, cov, n_samples):
    """Target-space draws with a shared subject component; returns (X, subject_index)."""
    k = spec.segments_per_subject
    n_subj = -(-n_samples // k)
    L = _cov_factor(cov)
    centers = _truncated(rng, mean, np.sqrt(1.0 - spec.within_subject) * L, n_subj)
    Lw = np.sqrt(spec.within_subject) * L
    X = np.empty((n_samples, D))
    subj = np.repeat(np.arange(n_subj), k)[:n_samples]
    for s in range(n_subj):
        rows = np.flatnonzero(subj == s)
        X[rows] = _truncated(rng, centers[s], Lw, rows.size)
    return X, subj


def _to_source(rng, spec, X, accents=None):
    A = np.eye(D) if spec.A is None else np.asarray(spec.A, dtype=float)
    Y = X @ A.T + np.asarray(spec.b, dtype=float)
    if spec.noise > 0:
        Y = Y + spec.noise * rng.standard_normal(Y.shape)
    if accents is not None:
        Y = Y + np.outer(accents == "other", np.asarray(spec.accent_shift, dtype=float))
    return _renormalize(Y)


def _table(X, subjects, labels, accents, language):
    n = X.shape[0]
    return FeatureTable(X, np.asarray(subjects, dtype=object), np.asarray(labels, dtype=object),
                        np.asarray(accents, dtype=object), np.full(n, language, dtype=object))


def _accent_column(spec, n):
    if spec.source_ood_accents is None:
        return np.full(n, "NA", dtype=object)
    n_na, n_other = spec.source_ood_accents
    total = n_na + n_other
    k = n_na if n == total else int(round(n * n_na / total)) if total else n
    return np.array(["NA"] * k + ["other"] * (n - k), dtype=object)


def generate_synthetic_corpus(spec):
    """Draw a :class:`BilingualData` bundle from ``spec`` (deterministic per seed)."""
    rng = np.random.default_rng(spec.seed)
    hm = np.asarray(spec.healthy_mean, dtype=float)
    am = np.asarray(spec.aphasic_mean, dtype=float)
    hc = _as_cov(spec.healthy_cov)
    ac = _as_cov(spec.aphasic_cov)

    def clinical(lang, n_h, n_a, tag, to_source):
        parts = []
        for label, mean, cov, n in (("healthy", hm, hc, n_h), ("aphasic", am, ac, n_a)):
            if n == 0:
                continue
            X, subj = _clinical_latent(rng, spec, mean, cov, n)
            X = _renormalize(X)
            if to_source:
                X = _to_source(rng, spec, X)
            ids = [f"{lang}-{tag}-{label[0]}{s:03d}" for s in subj]
            parts.append(_table(X, ids, [label] * n, ["unknown"] * n, lang))
        if not parts:
            return _table(np.zeros((0, D)), [], [], [], lang)
        return FeatureTable.concat(*parts)

    tgt, src = spec.target_language, spec.source_language
    target_clinical = clinical(tgt, spec.target_healthy, spec.target_aphasic, "clin", False)
    source_clinical = clinical(src, spec.source_healthy, spec.source_aphasic, "clin", True)

    Lh = _cov_factor(hc)
    om = hm + np.asarray(spec.ood_shift, dtype=float)
    Xt_ood = _renormalize(_truncated(rng, om, Lh, spec.target_ood))
    target_ood = _table(Xt_ood, [f"{tgt}-ood-{i:04d}" for i in range(spec.target_ood)],
                        ["healthy"] * spec.target_ood, ["unknown"] * spec.target_ood, tgt)

    acc_paired = _accent_column(spec, spec.target_ood)
    Xs_paired = Xt_ood
    if spec.paired_noise > 0:
        jitter = np.random.default_rng([spec.seed, 1])  # own stream: other pools stay put
        Xs_paired = Xs_paired + spec.paired_noise * jitter.standard_normal(Xs_paired.shape)
    Xs_paired = _to_source(rng, spec, Xs_paired, acc_paired)
    paired = _table(Xs_paired, [f"{src}-ood-p{i:04d}" for i in range(spec.target_ood)],
                    ["healthy"] * spec.target_ood, acc_paired, src)

    if spec.paired:
        source_ood = paired
    else:
        acc = _accent_column(spec, spec.source_ood)
        Xs = _to_source(rng, spec, _renormalize(_truncated(rng, om, Lh, spec.source_ood)), acc)
        source_ood = _table(Xs, [f"{src}-ood-{i:04d}" for i in range(spec.source_ood)],
                            ["healthy"] * spec.source_ood, acc, src)
    return BilingualData(source_clinical, source_ood, target_clinical, target_ood, paired)


@dataclass(frozen=True)
class SyntheticData:
    """Redraws the corpus for each run seed so runs differ in data, not just models."""

    spec: SynthCorpusSpec
    _cache: dict = field(default_factory=dict, compare=False)

    def for_seed(self, seed):
        if seed not in self._cache:
            child = np.random.SeedSequence([self.spec.seed, int(seed)]).generate_state(1)[0]
            self._cache[seed] = generate_synthetic_corpus(self.spec.with_seed(int(child)))
        return self._cache[seed]
