"""Random forest of shallow Gini trees with bootstrap resampling."""

from dataclasses import dataclass

import numpy as np

from ._labels import binary_labels, check_xy


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``feature[k] < 0`` marks a leaf.

    ``prob[k]`` is the positive-class share of the training samples that
    reached node ``k`` (so leaf class distributions are ``(1-p, p)``).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    prob: np.ndarray

    def leaf_prob(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not np.any(inner):
                return self.prob[node]
            rows = np.flatnonzero(inner)
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    def depth(self):
        def walk(k):
            return 0 if self.feature[k] < 0 else 1 + max(walk(self.left[k]), walk(self.right[k]))
        return walk(0)

    def to_dict(self):
        return {k: getattr(self, k).tolist()
                for k in ("feature", "threshold", "left", "right", "prob")}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["feature"], dtype=np.int64), np.array(d["threshold"], dtype=float),
                   np.array(d["left"], dtype=np.int64), np.array(d["right"], dtype=np.int64),
                   np.array(d["prob"], dtype=float))


def _gini(pos, total):
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, features):
    """Best (weighted impurity, feature, threshold) over the given features."""
    n = y.size
    best = (np.inf, -1, 0.0)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cum = np.cumsum(y[order])[:-1]
        valid = np.flatnonzero(xs[1:] > xs[:-1])
        if valid.size == 0:
            continue
        n_left = valid + 1.0
        n_right = n - n_left
        pos_l = cum[valid]
        pos_r = cum[-1] + y[order][-1] - pos_l
        score = (n_left * _gini(pos_l, n_left) + n_right * _gini(pos_r, n_right)) / n
        k = int(np.argmin(score))
        if score[k] < best[0]:
            best = (float(score[k]), int(f), float((xs[valid[k]] + xs[valid[k] + 1]) / 2.0))
    return best


def grow_tree(X, y, max_depth, n_features, rng):
    feature, threshold, left, right, prob = [], [], [], [], []

    def build(idx, depth):
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yy = y[idx]
        prob.append(float(yy.mean()))
        if depth >= max_depth or yy.min() == yy.max():
            return k
        feats = rng.choice(X.shape[1], size=n_features, replace=False)
        score, f, thr = _best_split(X[idx], yy, np.sort(feats))
        if f < 0 or score >= _gini(yy.sum(), yy.size) - 1e-12:
            return k
        mask = X[idx, f] <= thr
        feature[k] = f
        threshold[k] = thr
        left[k] = build(idx[mask], depth + 1)
        right[k] = build(idx[~mask], depth + 1)
        return k

    build(np.arange(y.size), 0)
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(prob))


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    classes: np.ndarray
    seed: int
    max_depth: int

    def score(self, X):
        """Mean leaf positive-class probability."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.mean([t.leaf_prob(X) for t in self.trees], axis=0)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        probs = np.array([t.leaf_prob(X) for t in self.trees])
        votes = (probs > 0.5).sum(axis=0) + 0.5 * (probs == 0.5).sum(axis=0)
        half = len(self.trees) / 2.0
        positive = np.where(votes == half, probs.mean(axis=0) > 0.5, votes > half)
        return self.classes[positive.astype(np.int64)]

    def to_dict(self):
        return {"kind": "forest", "seed": self.seed, "max_depth": self.max_depth,
                "classes": self.classes.tolist(), "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), np.array(d["classes"]),
                   int(d["seed"]), int(d["max_depth"]))


def train_forest(X, y, trees=200, max_depth=2, seed=0, max_features=None):
    """Bootstrap a forest; each node searches ``sqrt(d)`` random features."""
    X = check_xy(X, y)
    classes, y01 = binary_labels(y)
    n, d = X.shape
    n_features = max_features or max(1, int(np.sqrt(d)))
    out = []
    for child in np.random.SeedSequence(seed).spawn(trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        out.append(grow_tree(X[boot], y01[boot].astype(float), max_depth, n_features, rng))
    return ForestModel(tuple(out), classes, int(seed), int(max_depth))
