"""Dense feed-forward networks: forward/backward passes and an Adam loop."""

import numpy as np

from ..errors import ConvergenceError

ACTIVATIONS = ("relu", "tanh", "identity")


def init_params(sizes, rng):
    """Glorot-uniform weights, zero biases; returns a list of (W, b)."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return params


def flatten(params):
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in params])


def unflatten(theta, sizes):
    params = []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = theta[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = theta[pos:pos + fan_out]
        pos += fan_out
        params.append((W, b))
    return params


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _act_grad(z, h, kind):
    if kind == "relu":
        return (z > 0).astype(float)
    if kind == "tanh":
        return 1.0 - h * h
    return np.ones_like(z)


def forward(params, X, hidden_act, upto=None):
    """Activations of every layer; the last layer is linear (pre-output)."""
    zs, hs = [], [X]
    last = len(params) - 1
    for k, (W, b) in enumerate(params[:upto]):
        z = hs[-1] @ W + b
        h = z if k == last else _act(z, hidden_act)
        zs.append(z)
        hs.append(h)
    return zs, hs


def backward(params, zs, hs, d_out, hidden_act):
    """Gradients (dW, db) given dLoss/d(last pre-activation)."""
    grads = [None] * len(params)
    delta = d_out
    for k in range(len(params) - 1, -1, -1):
        W, _ = params[k]
        grads[k] = (hs[k].T @ delta, delta.sum(axis=0))
        if k > 0:
            delta = (delta @ W.T) * _act_grad(zs[k - 1], hs[k], hidden_act)
    return grads


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = []
        for k, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
            (mW, mb), (vW, vb) = self.m[k], self.v[k]
            mW = self.beta1 * mW + (1 - self.beta1) * gW
            mb = self.beta1 * mb + (1 - self.beta1) * gb
            vW = self.beta2 * vW + (1 - self.beta2) * gW * gW
            vb = self.beta2 * vb + (1 - self.beta2) * gb * gb
            self.m[k], self.v[k] = (mW, mb), (vW, vb)
            W = W - self.lr * (mW / c1) / (np.sqrt(vW / c2) + self.eps)
            b = b - self.lr * (mb / c1) / (np.sqrt(vb / c2) + self.eps)
            out.append((W, b))
        return out


def fit(params, X, targets, loss_and_grad, rng, lr=1e-3, batch_size=32, patience=20,
        max_epochs=2000, min_delta=1e-4):
    """Mini-batch Adam with early stopping on the epoch training loss.

    Training stops once the loss has not improved by ``min_delta`` for
    ``patience`` epochs. Returns ``(params, loss_curve)`` where the curve
    starts with the loss at initialization.
    """
    opt = Adam(params, lr=lr)
    n = X.shape[0]
    curve = [loss_and_grad(params, X, targets)[0]]
    best = curve[0]
    stale = 0
    for epoch in range(max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            rows = order[start:start + batch_size]
            loss, grads = loss_and_grad(params, X[rows], targets[rows])
            if not np.isfinite(loss):
                raise ConvergenceError(f"loss became NaN at epoch {epoch}", iterations=epoch)
            params = opt.step(params, grads)
            total += loss * rows.size
        curve.append(total / n)
        if curve[-1] < best - min_delta:
            best = curve[-1]
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return params, curve
