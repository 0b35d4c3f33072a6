"""Versioned JSON model bundles and atomic file output."""

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .models import model_from_dict
from .ot import AdaptationModel, transform
from .preprocess import RobustScaler, apply_robust_scaler

BUNDLE_FORMAT = "posot.model_bundle"
BUNDLE_VERSION = 1


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary sibling and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def read_json(path, fmt, version):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("format") != fmt:
        raise ValueError(f"{path}: not a {fmt} document")
    if doc.get("version") != version:
        raise ValueError(f"{path}: unsupported {fmt} version {doc.get('version')!r}")
    return doc


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to score raw features: optional map, scaler, classifier."""

    classifier: str
    scaler: RobustScaler
    model: object
    adaptation: AdaptationModel | None = None
    info: dict = field(default_factory=dict)

    def features(self, X):
        if self.adaptation is not None:
            X = transform(self.adaptation, X)
        return apply_robust_scaler(self.scaler, X)

    def predict(self, X):
        return self.model.predict(self.features(X))

    def score(self, X):
        return self.model.score(self.features(X))

    def to_dict(self):
        return {"format": BUNDLE_FORMAT, "version": BUNDLE_VERSION,
                "classifier": self.classifier, "scaler": self.scaler.to_dict(),
                "model": self.model.to_dict(),
                "adaptation": None if self.adaptation is None else self.adaptation.to_dict(),
                "info": dict(self.info)}

    @classmethod
    def from_dict(cls, d):
        ad = d.get("adaptation")
        return cls(d["classifier"], RobustScaler.from_dict(d["scaler"]), model_from_dict(d["model"]),
                   None if ad is None else AdaptationModel.from_dict(ad), dict(d.get("info", {})))

    def save(self, path):
        write_atomic(path, dump_json(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path, BUNDLE_FORMAT, BUNDLE_VERSION))
