"""Array-backed feature tables and the bilingual data bundle used by regimes."""

from dataclasses import dataclass

import numpy as np

from ..corpus import FEATURE_TAGS, FeatureSample, read_feature_csv


@dataclass(frozen=True)
class FeatureTable:
    X: np.ndarray
    subject: np.ndarray
    label: np.ndarray
    accent: np.ndarray
    language: np.ndarray

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        X = np.array([s.features for s in samples], dtype=float).reshape(-1, len(FEATURE_TAGS))
        return cls(X, np.array([s.subject_id for s in samples], dtype=object),
                   np.array([s.label for s in samples], dtype=object),
                   np.array([s.accent for s in samples], dtype=object),
                   np.array([s.language for s in samples], dtype=object))

    @classmethod
    def read_csv(cls, path):
        return cls.from_samples(read_feature_csv(path))

    def to_samples(self):
        return [FeatureSample(tuple(x), s, lang, acc, lab)
                for x, s, lab, acc, lang in zip(self.X, self.subject, self.label, self.accent,
                                                 self.language)]

    def __len__(self):
        return self.X.shape[0]

    @property
    def y(self):
        """1 for aphasic, 0 otherwise."""
        return (self.label == "aphasic").astype(np.int64)

    def subjects(self):
        """Language-qualified subject keys (ids may repeat across languages)."""
        return {(l, s) for l, s in zip(self.language, self.subject)}

    def take(self, idx):
        idx = np.asarray(idx)
        return FeatureTable(self.X[idx], self.subject[idx], self.label[idx], self.accent[idx],
                            self.language[idx])

    def where(self, mask):
        return self.take(np.flatnonzero(mask))

    def labeled(self):
        return self.where(np.isin(self.label, ("healthy", "aphasic")))

    def healthy(self):
        return self.where(self.label == "healthy")

    @staticmethod
    def concat(*tables):
        return FeatureTable(*(np.concatenate([getattr(t, f) for t in tables])
                              for f in ("X", "subject", "label", "accent", "language")))


@dataclass(frozen=True)
class BilingualData:
    """Clinical (labeled) and out-of-domain (healthy) pools for both languages.

    ``source`` is the resource-rich language the classifiers are trained in;
    ``target`` is the language whose samples get evaluated.
    """

    source_clinical: FeatureTable
    source_ood: FeatureTable
    target_clinical: FeatureTable
    target_ood: FeatureTable
    source_ood_paired: FeatureTable | None = None

    def for_seed(self, seed):
        return self

    def pools(self):
        out = {"source_clinical": self.source_clinical, "source_ood": self.source_ood,
               "target_clinical": self.target_clinical, "target_ood": self.target_ood}
        if self.source_ood_paired is not None:
            out["source_ood_paired"] = self.source_ood_paired
        return out
