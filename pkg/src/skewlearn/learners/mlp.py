"""Bagged one-hidden-layer perceptrons trained with Adam."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import ConvergenceError, one_hot, softmax, substreams

HIDDEN_UNITS = 100


@dataclass(frozen=True, eq=False)
class Network:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    n_iter: int
    loss_curve: np.ndarray

    def proba(self, X):
        H = np.maximum(X @ self.W1 + self.b1, 0.0)
        return softmax(H @ self.W2 + self.b2)


@dataclass(frozen=True, eq=False)
class BaggedMLPModel:
    members: tuple
    n_classes: int

    def proba(self, X):
        X = np.asarray(X, dtype=float)
        return sum(m.proba(X) for m in self.members) / len(self.members)


def loss_and_grad(params, X, Y, alpha=1e-4):
    """Mean cross-entropy plus ``alpha / (2 n) * (|W1|^2 + |W2|^2)``.

    ``params`` is ``[W1, b1, W2, b2]``; returns ``(loss, grads)`` in the
    same order.
    """
    W1, b1, W2, b2 = params
    n = X.shape[0]
    A = X @ W1 + b1
    H = np.maximum(A, 0.0)
    Z = H @ W2 + b2
    Z = Z - Z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Z).sum(axis=1))
    loss = np.sum(logsum - np.sum(Z * Y, axis=1)) / n
    loss += 0.5 * alpha / n * (np.sum(W1 * W1) + np.sum(W2 * W2))
    dZ = (np.exp(Z - logsum[:, None]) - Y) / n
    gW2 = H.T @ dZ + alpha / n * W2
    gb2 = dZ.sum(axis=0)
    dA = (dZ @ W2.T) * (A > 0)
    gW1 = X.T @ dA + alpha / n * W1
    gb1 = dA.sum(axis=0)
    return float(loss), [gW1, gb1, gW2, gb2]


def init_params(d, hidden, k, rng):
    def glorot(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return (rng.uniform(-bound, bound, (fan_in, fan_out)),
                rng.uniform(-bound, bound, fan_out))
    W1, b1 = glorot(d, hidden)
    W2, b2 = glorot(hidden, k)
    return [W1, b1, W2, b2]


def fit_network(X, y, n_classes, hidden=HIDDEN_UNITS, learning_rate=1e-3, max_iter=1000,
                batch_size=200, alpha=1e-4, tol=1e-4, n_iter_no_change=10, seed=0) -> Network:
    """Mini-batch Adam; an epoch is one pass over shuffled rows.

    Training stops after ``max_iter`` epochs or once the epoch loss has not
    improved by ``tol`` for ``n_iter_no_change`` consecutive epochs.
    """
    X = np.asarray(X, dtype=float)
    Y = one_hot(y, n_classes)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    params = init_params(d, hidden, n_classes, rng)
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    bs = min(batch_size, n)
    t = 0
    best, stall = np.inf, 0
    curve = []
    epoch = 0
    for epoch in range(1, max_iter + 1):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = perm[start:start + bs]
            loss, grads = loss_and_grad(params, X[idx], Y[idx], alpha)
            total += loss * idx.size
            t += 1
            lr_t = learning_rate * np.sqrt(1 - b2 ** t) / (1 - b1 ** t)
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= b1
                mi += (1 - b1) * g
                vi *= b2
                vi += (1 - b2) * g * g
                p -= lr_t * mi / (np.sqrt(vi) + eps)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise ConvergenceError("MLP loss became non-finite")
        curve.append(epoch_loss)
        if epoch_loss > best - tol:
            stall += 1
        else:
            stall = 0
        best = min(best, epoch_loss)
        if stall >= n_iter_no_change:
            break
    return Network(*params, epoch, np.array(curve))


def fit_bagged_mlp(X, y, n_classes, n_estimators=10, max_iteration=1000,
                   initial_learning_rate=1e-3, hidden=HIDDEN_UNITS, seed=0) -> BaggedMLPModel:
    """Train ``n_estimators`` networks, each on a bootstrap resample of the rows."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    members = []
    for s in substreams(seed, n_estimators):
        rng = np.random.default_rng(s)
        rows = rng.integers(0, n, size=n)
        members.append(fit_network(X[rows], y[rows], n_classes, hidden, initial_learning_rate,
                                   max_iteration, seed=int(rng.integers(2**32))))
    return BaggedMLPModel(tuple(members), n_classes)
