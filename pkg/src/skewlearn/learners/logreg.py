"""Multinomial logistic regression fitted by gradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import ConvergenceError, one_hot, softmax


@dataclass(frozen=True, eq=False)
class LogRegModel:
    coef: np.ndarray        # (C, d)
    intercept: np.ndarray   # (C,)
    n_iter: int
    grad_norm: float
    solver: str = "gd"

    def decision(self, X):
        return X @ self.coef.T + self.intercept

    def proba(self, X):
        return softmax(self.decision(X))


def loss_and_grad(W, b, X, Y, C_reg):
    """Summed softmax cross-entropy plus ``||W||^2 / (2 C_reg)``.

    Returns ``(loss, dW, db)``; the intercepts are not penalised.
    """
    Z = X @ W.T + b
    Z = Z - Z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Z).sum(axis=1))
    loss = float(np.sum(logsum - np.sum(Z * Y, axis=1)) + 0.5 / C_reg * np.sum(W * W))
    P = np.exp(Z - logsum[:, None])
    R = P - Y
    return loss, R.T @ X + W / C_reg, R.sum(axis=0)


def fit_logreg(X, y, n_classes, c=1.0, max_iterations=100, solver="lbfgs", tol=1e-6) -> LogRegModel:
    """Minimise the penalised loss by full-batch gradient descent.

    Armijo backtracking halves the step until sufficient decrease; after an
    accepted step the trial step doubles.  Stops when the largest gradient
    component is at most ``tol`` or after ``max_iterations`` steps.
    ``solver`` is recorded only.
    """
    X = np.asarray(X, dtype=float)
    Y = one_hot(y, n_classes)
    n, d = X.shape
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    loss, gW, gb = loss_and_grad(W, b, X, Y, c)
    # Lipschitz-style initial step
    step = 1.0 / (0.5 * (np.sum(X * X) + n) + 1.0 / c)
    it = 0
    gnorm = max(np.abs(gW).max(initial=0.0), np.abs(gb).max())
    while it < max_iterations and gnorm > tol:
        sq = np.sum(gW * gW) + np.sum(gb * gb)
        while True:
            W_new = W - step * gW
            b_new = b - step * gb
            new_loss, nW, nb = loss_and_grad(W_new, b_new, X, Y, c)
            if new_loss <= loss - 0.5 * step * sq or step < 1e-20:
                break
            step *= 0.5
        if not np.isfinite(new_loss):
            raise ConvergenceError("logistic regression loss became non-finite")
        W, b, loss, gW, gb = W_new, b_new, new_loss, nW, nb
        step *= 2.0
        it += 1
        gnorm = max(np.abs(gW).max(initial=0.0), np.abs(gb).max())
    return LogRegModel(W, b, it, float(gnorm), solver)
