"""Training regimes: baselines, OT-adapted transfer and their ablations.

Every regime trains on one partition and evaluates on a disjoint one; the
subjects on both sides are checked for each partition before scoring.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInputError
from ..models import CLASSIFIERS, train_autoencoder, train_classifier
from ..ot import fit_adaptation, transform
from ..preprocess import apply_robust_scaler, fit_robust_scaler, oversample
from .data import FeatureTable
from .folds import stratified_subject_subset, subject_stratified_kfold
from .metrics import auroc, macro_f1

log = logging.getLogger(__name__)

REGIMES = ("Unilingual", "DirectTransfer", "MultilingualEncoding", "OT-EMD", "OT-Gaussian",
           "OT-EMD-R")
OT_METHODS = {"OT-EMD": "emd", "OT-EMD-R": "sinkhorn", "OT-Gaussian": "gaussian"}

# stream labels for deriving independent generators from one run seed
_FOLDS, _SMOTE, _MODEL, _SUBSET, _ACCENT, _OTFOLDS, _AE, _MATCH = range(8)


class LeakageError(RuntimeError):
    """A subject appeared on both sides of a train/evaluation split."""


@dataclass(frozen=True)
class RegimeSpec:
    regime: str
    classifier: str = "SVM"
    include_aphasic_in_ot: bool = False
    paired: bool = False
    accent_mix: tuple | None = None  # (count NA, count other)
    train_fraction: float = 1.0
    seeds: tuple = (0, 1, 2, 3, 4)
    name: str | None = None
    compare_to: str | None = None

    def __post_init__(self):
        problems = []
        if self.regime not in REGIMES:
            problems.append(f"unknown regime {self.regime!r}")
        if self.classifier not in CLASSIFIERS:
            problems.append(f"unknown classifier {self.classifier!r}")
        is_ot = self.regime in OT_METHODS
        for flag in ("include_aphasic_in_ot", "paired"):
            if getattr(self, flag) and not is_ot:
                problems.append(f"{flag} is only valid for OT regimes")
        if self.accent_mix is not None:
            if not is_ot:
                problems.append("accent_mix is only valid for OT regimes")
            elif len(self.accent_mix) != 2 or min(self.accent_mix) < 0 or sum(self.accent_mix) == 0:
                problems.append("accent_mix must be two nonnegative counts, not both zero")
        if not 0 < self.train_fraction <= 1:
            problems.append("train_fraction must lie in (0, 1]")
        if len(self.seeds) == 0 or len(set(self.seeds)) != len(self.seeds):
            problems.append("seeds must be a nonempty list without repeats")
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "seeds", tuple(sorted(int(s) for s in self.seeds)))
        if self.accent_mix is not None:
            object.__setattr__(self, "accent_mix", tuple(int(c) for c in self.accent_mix))

    @property
    def label(self):
        return self.name or self.regime


@dataclass(frozen=True)
class Settings:
    """Pipeline hyperparameters shared by every regime."""

    smote_k: int = 3
    unilingual_folds: int = 10
    classifier_params: dict = field(default_factory=dict)
    reg: float = 3.0
    mu: float = 1.0
    ot_max_iter: int = 20
    ot_tol: float = 1e-5
    k_oos: int = 1
    cost_normalization: str | None = None
    autoencoder_hidden: tuple = (5, 3, 3, 5)


@dataclass(frozen=True)
class FoldScore:
    seed: int
    fold: int
    f1: float
    auroc: float | None
    n_eval: int


@dataclass(frozen=True)
class RegimeResult:
    spec: RegimeSpec
    scores: tuple
    partitions_checked: int

    def per_seed(self, metric="f1"):
        """Mean over evaluation folds for each seed, in seed order."""
        out = []
        for s in self.spec.seeds:
            vals = [getattr(f, metric) for f in self.scores
                    if f.seed == s and getattr(f, metric) is not None]
            out.append(float(np.mean(vals)) if vals else float("nan"))
        return out

    def summary(self, metric="f1"):
        vals = np.array([getattr(f, metric) for f in self.scores
                         if getattr(f, metric) is not None], dtype=float)
        if vals.size == 0:
            return float("nan"), float("nan"), 0
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        return float(vals.mean()), std, int(vals.size)


def _sub(seed, stream):
    return int(np.random.SeedSequence([int(seed), stream]).generate_state(1)[0])


def check_disjoint(train_keys, eval_keys):
    overlap = set(train_keys) & set(eval_keys)
    if overlap:
        raise LeakageError(f"subjects on both sides of a split: {sorted(overlap)[:5]}")


def _fit_classifier(X, y, spec, seed, settings):
    scaler = fit_robust_scaler(X)
    Xb, yb = oversample(apply_robust_scaler(scaler, X), y, k=settings.smote_k,
                        seed=_sub(seed, _SMOTE))
    model = train_classifier(spec.classifier, Xb, yb, seed=_sub(seed, _MODEL),
                             params=settings.classifier_params.get(spec.classifier))
    return scaler, model


def _score(scaler, model, X, y, seed, fold):
    Z = apply_robust_scaler(scaler, X)
    f1 = macro_f1(y, model.predict(Z))
    auc = auroc(y, model.score(Z)) if 0 < y.sum() < y.size else None
    return FoldScore(seed, fold, f1, auc, int(y.size))


def _subset(table, fraction, seed):
    if fraction == 1:
        return table
    return table.take(stratified_subject_subset(table.subject, table.y, fraction,
                                                _sub(seed, _SUBSET)))


def _ood(table):
    return table.where(table.label != "aphasic")


def _accent_filter(table, mix, seed):
    rng = np.random.default_rng(_sub(seed, _ACCENT))
    keep = []
    for accent, count in zip(("NA", "other"), mix):
        idx = np.flatnonzero(table.accent == accent)
        if count > idx.size:
            raise DegenerateInputError(
                f"accent mix asks for {count} {accent!r} samples, only {idx.size} available")
        keep.append(np.sort(rng.permutation(idx)[:count]))
    return table.take(np.concatenate(keep))


def _class_matched(pool, reference, seed):
    """Rows of ``pool`` with the per-class counts of ``reference`` (capped by availability)."""
    rng = np.random.default_rng(seed)
    keep = []
    for c in (0, 1):
        idx = np.flatnonzero(pool.y == c)
        n = min(int(np.sum(reference.y == c)), idx.size)
        keep.append(np.sort(rng.permutation(idx)[:n]))
    return pool.take(np.concatenate(keep))


def _run_unilingual(data, spec, seed, settings):
    clin = data.target_clinical.labeled()
    folds = subject_stratified_kfold(clin.subject, clin.y, settings.unilingual_folds,
                                     _sub(seed, _FOLDS))
    scores = []
    for k, (tr, te) in enumerate(folds):
        train = _subset(clin.take(tr), spec.train_fraction, seed)
        test = clin.take(te)
        check_disjoint(train.subjects(), test.subjects())
        scaler, model = _fit_classifier(train.X, train.y, spec, seed, settings)
        scores.append(_score(scaler, model, test.X, test.y, seed, k))
    return scores, len(scores)


def _run_direct(data, spec, seed, settings):
    train = _subset(data.source_clinical.labeled(), spec.train_fraction, seed)
    test = data.target_clinical.labeled()
    check_disjoint(train.subjects(), test.subjects())
    scaler, model = _fit_classifier(train.X, train.y, spec, seed, settings)
    return [_score(scaler, model, test.X, test.y, seed, 0)], 1


def _run_encoding(data, spec, seed, settings):
    train = _subset(data.source_clinical.labeled(), spec.train_fraction, seed)
    test = data.target_clinical.labeled()
    pooled = FeatureTable.concat(_ood(data.source_ood), _ood(data.target_ood))
    check_disjoint(train.subjects() | pooled.subjects(), test.subjects())
    ae = train_autoencoder(pooled.X, hidden=settings.autoencoder_hidden, seed=_sub(seed, _AE))
    scaler, model = _fit_classifier(ae.encode(train.X), train.y, spec, seed, settings)
    return [_score(scaler, model, ae.encode(test.X), test.y, seed, 0)], 1


def _run_ot(data, spec, seed, settings):
    method = OT_METHODS[spec.regime]
    train = _subset(data.source_clinical.labeled(), spec.train_fraction, seed)
    clin = data.target_clinical.labeled()
    if spec.paired:
        if data.source_ood_paired is None:
            raise DegenerateInputError("paired regime needs a paired out-of-domain pool")
        dest = _ood(data.source_ood_paired)
    else:
        dest = _ood(data.source_ood)
    if spec.accent_mix is not None:
        dest = _accent_filter(dest, spec.accent_mix, seed)
    origin = _ood(data.target_ood)
    scaler, model = _fit_classifier(train.X, train.y, spec, seed, settings)

    def adapt(origin_pool, dest_pool):
        return fit_adaptation(origin_pool.X, dest_pool.X, method, reg=settings.reg,
                              mu=settings.mu, max_iter=settings.ot_max_iter,
                              tol=settings.ot_tol, k_oos=settings.k_oos,
                              cost_normalization=settings.cost_normalization)

    if not spec.include_aphasic_in_ot:
        check_disjoint(train.subjects() | origin.subjects() | dest.subjects(), clin.subjects())
        mapped = transform(adapt(origin, dest), clin.X)
        return [_score(scaler, model, mapped, clin.y, seed, 0)], 1

    for c in (0, 1):
        n_subj = np.unique(clin.subject[clin.y == c]).size
        if n_subj < 2:
            raise DegenerateInputError(
                "including clinical samples in OT needs at least 2 subjects per class")
    halves = subject_stratified_kfold(clin.subject, clin.y, 2, _sub(seed, _OTFOLDS))
    scores = []
    for k, (ot_idx, ev_idx) in enumerate(halves):
        ot_part = clin.take(ot_idx)
        test = clin.take(ev_idx)
        o_pool = FeatureTable.concat(origin, ot_part)
        d_pool = FeatureTable.concat(dest, _class_matched(train, ot_part, _sub(seed, _MATCH) + k))
        check_disjoint(train.subjects() | o_pool.subjects() | d_pool.subjects(),
                       test.subjects())
        mapped = transform(adapt(o_pool, d_pool), test.X)
        scores.append(_score(scaler, model, mapped, test.y, seed, k))
    return scores, len(scores)


_RUNNERS = {"Unilingual": _run_unilingual, "DirectTransfer": _run_direct,
            "MultilingualEncoding": _run_encoding}


def run_regime(data, spec, settings=None):
    """Run ``spec`` for each of its seeds; ``data.for_seed(seed)`` supplies the corpus."""
    settings = settings or Settings()
    runner = _RUNNERS.get(spec.regime, _run_ot)
    scores = []
    checked = 0
    for seed in spec.seeds:
        s, n = runner(data.for_seed(seed), spec, seed, settings)
        scores.extend(s)
        checked += n
        log.info("%s/%s seed %d: F1 %s", spec.label, spec.classifier, seed,
                 " ".join(f"{x.f1:.2f}" for x in s))
    return RegimeResult(spec, tuple(scores), checked)
