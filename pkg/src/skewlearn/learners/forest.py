"""Random forest of bootstrap CART trees."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import resolve_max_features, substreams
from ._tree import Tree, grow_gini


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    n_classes: int
    n_features: int

    def proba(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_classes))
        for t in self.trees:
            out += t.predict(X)
        return out / len(self.trees)

    def importances(self):
        imp = np.zeros(self.n_features)
        for t in self.trees:
            imp += t.importances(self.n_features)
        total = imp.sum()
        return imp / total if total > 0 else imp


def fit_tree(X, y, n_classes, max_depth=None, min_samples_split=2, min_samples_leaf=1,
             max_features=None, seed=0) -> Tree:
    """A single CART tree on all rows (no bootstrap)."""
    d = np.asarray(X).shape[1]
    return grow_gini(X, y, np.arange(len(y)), n_classes, max_depth, min_samples_split,
                     min_samples_leaf, resolve_max_features(max_features, d), seed)


def fit_forest(X, y, n_classes, n_estimators=100, max_features="sqrt", max_depth=None,
               min_samples_split=2, min_samples_leaf=1, bootstrap=True, seed=0) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    mf = resolve_max_features(max_features, d)
    trees = []
    for s in substreams(seed, n_estimators):
        rng = np.random.default_rng(s)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(grow_gini(X, y, rows, n_classes, max_depth, min_samples_split,
                               min_samples_leaf, mf, s))
    return ForestModel(tuple(trees), n_classes, d)
