"""Small fully connected regressor trained with mini-batch Adam.

Hidden layers use tanh, the output layer is linear, the loss is the mean
squared error over all outputs of a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["MlpParams", "MlpRegressor", "TrainingError", "train"]


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpParams:
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64
    epochs: int = 300
    seed: int = 0


@dataclass
class MlpRegressor:
    weights: list
    biases: list
    loss_history: list = field(default_factory=list)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @classmethod
    def init(cls, sizes, rng) -> "MlpRegressor":
        """Glorot-uniform weights, zero biases."""
        W, b = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            lim = math.sqrt(6.0 / (fan_in + fan_out))
            W.append(rng.uniform(-lim, lim, (fan_in, fan_out)))
            b.append(np.zeros(fan_out))
        return cls(W, b)

    def forward(self, X, keep: bool = False):
        a = np.asarray(X, dtype=float)
        acts = [a]
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = z if i == last else np.tanh(z)
            acts.append(a)
        return (a, acts) if keep else a

    def loss(self, X, Y) -> float:
        return float(np.mean((self.forward(X) - Y) ** 2))

    def gradients(self, X, Y):
        """Loss and its gradient with respect to every weight and bias."""
        out, acts = self.forward(X, keep=True)
        diff = out - Y
        loss = float(np.mean(diff ** 2))
        delta = 2.0 * diff / diff.size
        gW, gb = [None] * len(self.weights), [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            gW[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (1.0 - acts[i] ** 2)
        return loss, gW, gb

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]


def train(X, Y, params: MlpParams = MlpParams(), callback=None) -> MlpRegressor:
    """Fit on standardized inputs ``X`` and targets ``Y`` (both 2-D).

    ``loss_history`` records the full-training-set loss after each epoch.
    Raises :class:`TrainingError` as soon as the loss stops being finite.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    if n < params.batch_size:
        raise ValueError(f"need at least batch_size={params.batch_size} rows, got {n}")
    rng = np.random.default_rng(params.seed)
    net = MlpRegressor.init([X.shape[1], *params.hidden, Y.shape[1]], rng)
    theta = net.parameters()
    m = [np.zeros_like(p) for p in theta]
    v = [np.zeros_like(p) for p in theta]
    b1, b2, lr, eps = params.beta1, params.beta2, params.learning_rate, params.eps
    t = 0
    for epoch in range(1, params.epochs + 1):
        perm = rng.permutation(n)
        for s in range(0, n - params.batch_size + 1, params.batch_size):
            rows = perm[s:s + params.batch_size]
            loss, gW, gb = net.gradients(X[rows], Y[rows])
            if not math.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            t += 1
            grads = [g for pair in zip(gW, gb) for g in pair]
            c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
            for p, g, mi, vi in zip(theta, grads, m, v):
                mi *= b1
                mi += (1.0 - b1) * g
                vi *= b2
                vi += (1.0 - b2) * g * g
                p -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
        full = net.loss(X, Y)
        if not math.isfinite(full):
            raise TrainingError(f"loss diverged at epoch {epoch}")
        net.loss_history.append(full)
        if callback is not None:
            callback(epoch, full)
    return net
