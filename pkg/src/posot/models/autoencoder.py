"""Tanh autoencoder with a small bottleneck, used as a shared embedding."""

from dataclasses import dataclass, field

import numpy as np

from . import _nn
from ..errors import DegenerateInputError


def _loss_and_grad(params, X, _target):
    zs, hs = _nn.forward(params, X, "tanh")
    diff = zs[-1] - X
    n = X.shape[0]
    loss = float((diff * diff).sum() / (n * X.shape[1]))
    grads = _nn.backward(params, zs, hs, 2.0 * diff / (n * X.shape[1]), "tanh")
    return loss, grads


@dataclass(frozen=True)
class AutoencoderModel:
    """Inputs are standardized with the stored mean/scale before encoding."""

    params: list
    mean: np.ndarray
    scale: np.ndarray
    n_encoder: int
    seed: int
    loss_curve: list = field(default_factory=list)

    @property
    def latent_dim(self):
        return self.params[self.n_encoder - 1][0].shape[1]

    def _std(self, X):
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.mean) / self.scale

    def encode(self, X):
        _, hs = _nn.forward(self.params, self._std(X), "tanh", upto=self.n_encoder)
        return hs[-1]

    def reconstruct(self, X):
        zs, _ = _nn.forward(self.params, self._std(X), "tanh")
        return zs[-1] * self.scale + self.mean

    def to_dict(self):
        return {"kind": "autoencoder", "seed": self.seed, "n_encoder": self.n_encoder,
                "mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params]}

    @classmethod
    def from_dict(cls, d):
        params = [(np.array(l["W"], dtype=float), np.array(l["b"], dtype=float))
                  for l in d["layers"]]
        return cls(params, np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float),
                   int(d["n_encoder"]), int(d["seed"]))


def train_autoencoder(X, hidden=(5, 3, 3, 5), seed=0, lr=1e-3, batch_size=32, patience=20,
                      max_epochs=2000):
    """Minimize mean squared reconstruction error; latent = middle hidden layer."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 10:
        raise DegenerateInputError("autoencoder needs at least 10 samples")
    if len(hidden) % 2:
        raise ValueError("hidden sizes must split evenly into encoder and decoder")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *hidden, X.shape[1]]
    params = _nn.init_params(sizes, rng)
    params, curve = _nn.fit(params, Z, Z, _loss_and_grad, rng, lr=lr, batch_size=batch_size,
                            patience=patience, max_epochs=max_epochs, min_delta=1e-6)
    return AutoencoderModel(params, mean, scale, len(hidden) // 2, int(seed), curve)
