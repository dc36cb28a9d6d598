"""Multi-class gradient boosting with softmax loss.

One engine, two modes:

``gbt``
    Trees split on squared error of the residuals ``onehot - p``; each leaf
    then takes a Newton step ``(K-1)/K * sum(r) / sum(p(1-p))``.
``xgb``
    Trees split on the regularized second-order gain and leaves take
    ``-G/(H + lambda)``; ``min_child_weight`` bounds the hessian sum of
    each child and ``gamma`` is subtracted from every split gain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import ConvergenceError, log_loss, one_hot, resolve_max_features, softmax, substreams
from ._tree import grow_newton


@dataclass(frozen=True, eq=False)
class BoostingModel:
    init: np.ndarray            # (K,) initial raw scores
    trees: tuple                # rounds x K
    learning_rate: float
    n_features: int
    mode: str
    train_loss: np.ndarray      # mean training log loss after 0..rounds

    @property
    def n_classes(self) -> int:
        return self.init.shape[0]

    def raw(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.tile(self.init, (X.shape[0], 1))
        for round_trees in self.trees:
            for k, t in enumerate(round_trees):
                F[:, k] += self.learning_rate * t.predict(X)[:, 0]
        return F

    def proba(self, X):
        return softmax(self.raw(X))

    def importances(self):
        imp = np.zeros(self.n_features)
        for round_trees in self.trees:
            for t in round_trees:
                imp += t.importances(self.n_features)
        total = imp.sum()
        return imp / total if total > 0 else imp


def fit_boosting(X, y, n_classes, mode="gbt", n_estimators=100, learning_rate=0.1, max_depth=3,
                 min_samples_split=2, min_samples_leaf=1, max_features=None,
                 min_child_weight=1.0, gamma=0.0, reg_lambda=1.0, subsample=1.0,
                 colsample_bytree=1.0, seed=0) -> BoostingModel:
    if mode not in ("gbt", "xgb"):
        raise ValueError(f"unknown boosting mode {mode!r}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    K = n_classes
    Y = one_hot(y, K)
    prior = np.bincount(y, minlength=K) / n
    init = np.log(np.maximum(prior, 1e-12))
    init -= init.mean()
    F = np.tile(init, (n, 1))
    ones = np.ones(n)
    mf = resolve_max_features(max_features, d)
    n_cols = max(1, int(round(colsample_bytree * d)))
    n_sub = max(1, int(round(subsample * n)))

    rounds = []
    losses = [log_loss(softmax(F), y) / n]
    for s in substreams(seed, n_estimators):
        rng = np.random.default_rng(s)
        P = softmax(F)
        rows = np.sort(rng.choice(n, n_sub, replace=False)) if n_sub < n else np.arange(n)
        tree_seeds = rng.integers(0, 2**32, size=K)
        round_trees = []
        for k in range(K):
            g = P[:, k] - Y[:, k]
            h = P[:, k] * (1.0 - P[:, k])
            if mode == "gbt":
                t = grow_newton(X, g, h, rows, split_hessian=ones, lam=0.0, gamma=0.0,
                                min_child_weight=0.0, max_depth=max_depth,
                                min_samples_split=min_samples_split,
                                min_samples_leaf=min_samples_leaf, max_features=mf,
                                leaf_scale=(K - 1) / K, seed=tree_seeds[k])
            else:
                cols = (np.sort(rng.choice(d, n_cols, replace=False)) if n_cols < d
                        else np.arange(d))
                t = grow_newton(X, g, h, rows, lam=reg_lambda, gamma=gamma,
                                min_child_weight=min_child_weight, max_depth=max_depth,
                                allowed_features=cols, seed=tree_seeds[k])
            round_trees.append(t)
        for k, t in enumerate(round_trees):
            F[:, k] += learning_rate * t.predict(X)[:, 0]
        if not np.all(np.isfinite(F)):
            raise ConvergenceError("boosting scores became non-finite")
        rounds.append(tuple(round_trees))
        losses.append(log_loss(softmax(F), y) / n)
    return BoostingModel(init, tuple(rounds), float(learning_rate), d, mode, np.array(losses))
