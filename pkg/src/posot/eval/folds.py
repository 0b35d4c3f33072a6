"""Subject-grouped, class-balanced k-fold assignment."""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError


@dataclass(frozen=True)
class FoldAssignment:
    fold: np.ndarray  # per-sample fold index
    k: int

    def split(self, i):
        """``(train_idx, test_idx)`` for fold ``i``."""
        return np.flatnonzero(self.fold != i), np.flatnonzero(self.fold == i)

    def __iter__(self):
        return (self.split(i) for i in range(self.k))


def subject_stratified_kfold(subjects, labels, k=10, seed=0):
    """Assign whole subjects to folds, greedily balancing per-class counts.

    Subjects are visited in a seeded random order (larger subjects first) and
    each goes to the fold holding the fewest samples of its class, then the
    fewest samples overall, then the lowest index.
    """
    subjects = np.asarray(subjects).ravel()
    labels = np.asarray(labels).ravel()
    if subjects.shape != labels.shape:
        raise ValueError("subjects and labels lengths differ")
    if k < 2:
        raise ValueError("need at least 2 folds")
    uniq, inverse = np.unique(subjects, return_inverse=True)
    if uniq.size < k:
        raise DegenerateInputError(f"{uniq.size} subjects cannot fill {k} folds")
    classes, lab = np.unique(labels, return_inverse=True)
    size = np.bincount(inverse, minlength=uniq.size)
    # a subject's class is its most frequent label (lowest on ties)
    counts = np.zeros((uniq.size, classes.size), dtype=np.int64)
    np.add.at(counts, (inverse, lab), 1)
    subj_class = counts.argmax(axis=1)

    order = np.random.default_rng(seed).permutation(uniq.size)
    order = order[np.argsort(-size[order], kind="stable")]
    per_class = np.zeros((k, classes.size), dtype=np.int64)
    total = np.zeros(k, dtype=np.int64)
    subj_fold = np.empty(uniq.size, dtype=np.int64)
    for s in order:
        c = subj_class[s]
        f = min(range(k), key=lambda j: (per_class[j, c], total[j], j))
        subj_fold[s] = f
        per_class[f] += counts[s]
        total[f] += size[s]
    return FoldAssignment(subj_fold[inverse], k)


def stratified_subject_subset(subjects, labels, fraction, seed=0):
    """Sample indices keeping about ``fraction`` of each class's subjects."""
    subjects = np.asarray(subjects).ravel()
    labels = np.asarray(labels).ravel()
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if fraction == 1:
        return np.arange(subjects.size)
    rng = np.random.default_rng(seed)
    keep = []
    for c in np.unique(labels):
        subj = np.unique(subjects[labels == c])
        n = max(1, int(round(fraction * subj.size)))
        keep.extend(rng.permutation(subj)[:n].tolist())
    return np.flatnonzero(np.isin(subjects, keep))
