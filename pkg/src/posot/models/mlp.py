"""ReLU multilayer perceptron with a two-way softmax output."""

from dataclasses import dataclass, field

import numpy as np

from . import _nn
from ._labels import binary_labels, check_xy

L2 = 1e-4


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(params, X, y, l2=L2):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` (per sample) and its gradient."""
    zs, hs = _nn.forward(params, X, "relu")
    P = _softmax(zs[-1])
    n = X.shape[0]
    loss = -np.mean(np.log(np.clip(P[np.arange(n), y], 1e-300, None)))
    loss += 0.5 * l2 * sum((W * W).sum() for W, _ in params) / n
    d_out = P.copy()
    d_out[np.arange(n), y] -= 1.0
    d_out /= n
    grads = _nn.backward(params, zs, hs, d_out, "relu")
    grads = [(gW + l2 * W / n, gb) for (gW, gb), (W, _) in zip(grads, params)]
    return float(loss), grads


def flat_loss_and_grad(theta, sizes, X, y, l2=L2):
    """Flat-parameter view of :func:`loss_and_grad` for gradient checks."""
    loss, grads = loss_and_grad(_nn.unflatten(theta, sizes), X, y, l2)
    return loss, _nn.flatten(grads)


@dataclass(frozen=True)
class MlpModel:
    params: list
    classes: np.ndarray
    seed: int
    activation: str = "relu"
    loss_curve: list = field(default_factory=list)

    def proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        zs, _ = _nn.forward(self.params, X, self.activation)
        return _softmax(zs[-1])

    def score(self, X):
        """Positive-class probability."""
        return self.proba(X)[:, 1]

    def predict(self, X):
        return self.classes[np.argmax(self.proba(X), axis=1)]

    def to_dict(self):
        return {"kind": "mlp", "seed": self.seed, "activation": self.activation,
                "classes": self.classes.tolist(),
                "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params]}

    @classmethod
    def from_dict(cls, d):
        params = [(np.array(l["W"], dtype=float), np.array(l["b"], dtype=float))
                  for l in d["layers"]]
        return cls(params, np.array(d["classes"]), int(d["seed"]), d["activation"])


def train_mlp(X, y, hidden=(100, 100), seed=0, lr=1e-3, batch_size=32, patience=20,
              max_epochs=2000, l2=L2):
    X = check_xy(X, y)
    classes, y01 = binary_labels(y)
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *hidden, 2]
    params = _nn.init_params(sizes, rng)
    params, curve = _nn.fit(params, X, y01, lambda p, a, b: loss_and_grad(p, a, b, l2), rng,
                            lr=lr, batch_size=batch_size, patience=patience,
                            max_epochs=max_epochs)
    return MlpModel(params, classes, int(seed), "relu", curve)
