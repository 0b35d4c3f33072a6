"""Binary classifiers and the autoencoder embedding."""

from .autoencoder import AutoencoderModel, train_autoencoder
from .forest import ForestModel, train_forest
from .mlp import MlpModel, train_mlp
from .svm import SvmModel, train_svm

CLASSIFIERS = ("SVM", "RF", "MLP")

DEFAULT_PARAMS = {
    "SVM": {"C": 0.1, "gamma": 0.001},
    "RF": {"trees": 200, "max_depth": 2},
    "MLP": {"hidden": [100, 100], "lr": 1e-3, "batch_size": 32, "patience": 20,
            "max_epochs": 2000},
}


def train_classifier(name, X, y, seed=0, params=None):
    """Train ``name`` in {SVM, RF, MLP} with defaults overridden by ``params``."""
    if name not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {name!r}; expected one of {CLASSIFIERS}")
    kw = {**DEFAULT_PARAMS[name], **(params or {})}
    if name == "SVM":
        return train_svm(X, y, **kw)
    if name == "RF":
        return train_forest(X, y, seed=seed, **kw)
    kw["hidden"] = tuple(kw["hidden"])
    return train_mlp(X, y, seed=seed, **kw)


def model_from_dict(d):
    kinds = {"svm": SvmModel, "forest": ForestModel, "mlp": MlpModel,
             "autoencoder": AutoencoderModel}
    try:
        return kinds[d["kind"]].from_dict(d)
    except KeyError as exc:
        raise ValueError(f"unknown model kind {d.get('kind')!r}") from exc


__all__ = [
    "AutoencoderModel", "CLASSIFIERS", "DEFAULT_PARAMS", "ForestModel", "MlpModel",
    "SvmModel", "model_from_dict", "train_autoencoder", "train_classifier", "train_forest",
    "train_mlp", "train_svm",
]
