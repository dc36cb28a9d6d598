"""Binary decision trees stored as flat arrays.

Two growers share one node layout:

* :func:`grow_gini` -- CART classification tree, Gini impurity, leaves hold
  class proportions.
* :func:`grow_newton` -- regression tree on per-row gradient/hessian pairs;
  split gain ``1/2 [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)] - gamma``,
  leaf weight ``-G/(H+lam)``.

Split candidates are midpoints between consecutive distinct sorted values;
rows with ``x[feature] <= threshold`` go left.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray       # (n_nodes, n_outputs)
    impurity: np.ndarray    # Gini of the node (classification) or 0
    gain: np.ndarray        # weighted decrease credited to the split feature
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def apply(self, X) -> np.ndarray:
        return _apply(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold,
                      self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def importances(self, n_features: int) -> np.ndarray:
        imp = np.zeros(n_features)
        internal = self.feature != LEAF
        np.add.at(imp, self.feature[internal], self.gain[internal])
        return imp


def gini(counts) -> np.ndarray:
    """Gini impurity ``1 - sum_c p_c^2`` along the last axis."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n[..., None]
    out = 1.0 - np.sum(p * p, axis=-1)
    return np.where(n > 0, out, 0.0)


def split_gain(GL, HL, GR, HR, lam, gamma=0.0) -> float:
    return 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam)
                  - (GL + GR) ** 2 / (HL + HR + lam)) - gamma


def leaf_weight(G, H, lam) -> float:
    return -G / (H + lam)


def _finish(n, feature, threshold, left, right, value, impurity, gain, count):
    return Tree(feature[:n].copy(), threshold[:n].copy(), left[:n].copy(), right[:n].copy(),
                value[:n].copy(), impurity[:n].copy(), gain[:n].copy(), count[:n].copy())


@njit(cache=True, nogil=True)
def _apply(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] != -1:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@njit(cache=True, nogil=True)
def _midpoint(a, b):
    t = 0.5 * (a + b)
    if t >= b or t < a:
        t = a
    return t


@njit(cache=True, nogil=True)
def _grow_gini(X, y, rows, n_classes, max_depth, min_samples_split, min_samples_leaf,
               max_features, seed):
    np.random.seed(seed)
    n_features = X.shape[1]
    cap = 2 * rows.shape[0] + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))
    impurity = np.zeros(cap)
    gain = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    idx = rows.copy()
    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = idx.shape[0]
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    feats = np.arange(n_features)
    cnt = np.zeros(n_classes)
    lcnt = np.zeros(n_classes)
    vals = np.empty(idx.shape[0])
    order = np.empty(idx.shape[0], dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        s = stack[top, 1]
        e = stack[top, 2]
        depth = stack[top, 3]
        n = e - s
        cnt[:] = 0.0
        for p in range(s, e):
            cnt[y[idx[p]]] += 1.0
        sumsq = 0.0
        for c in range(n_classes):
            sumsq += cnt[c] * cnt[c]
            value[node, c] = cnt[c] / n
        imp = 1.0 - sumsq / (n * n)
        impurity[node] = imp
        count[node] = n

        if (imp <= 1e-15 or (max_depth >= 0 and depth >= max_depth)
                or n < min_samples_split or n < 2 * min_samples_leaf):
            continue

        best_score = -np.inf
        best_f = -1
        best_t = 0.0
        # partial Fisher-Yates over features; constant features do not use up the quota
        for i in range(n_features):
            feats[i] = i
        visited = 0
        for i in range(n_features):
            if visited >= max_features:
                break
            jj = i + np.random.randint(n_features - i)
            tmp = feats[i]
            feats[i] = feats[jj]
            feats[jj] = tmp
            f = feats[i]
            for p in range(n):
                vals[p] = X[idx[s + p], f]
            o = np.argsort(vals[:n], kind="mergesort")
            if vals[o[0]] == vals[o[n - 1]]:
                continue
            visited += 1
            lcnt[:] = 0.0
            sl = 0.0
            sr = sumsq
            for p in range(n - 1):
                c = y[idx[s + o[p]]]
                sl += 2.0 * lcnt[c] + 1.0
                sr -= 2.0 * (cnt[c] - lcnt[c]) - 1.0
                lcnt[c] += 1.0
                a = vals[o[p]]
                b = vals[o[p + 1]]
                if a == b:
                    continue
                nl = p + 1
                nr = n - nl
                if nl < min_samples_leaf or nr < min_samples_leaf:
                    continue
                score = sl / nl + sr / nr
                if score > best_score + 1e-12:
                    best_score = score
                    best_f = f
                    best_t = _midpoint(a, b)

        if best_f < 0:
            continue
        # partition idx[s:e] in place
        lo = s
        for p in range(s, e):
            if X[idx[p], best_f] <= best_t:
                order[lo - s] = idx[p]
                lo += 1
        hi = lo
        for p in range(s, e):
            if X[idx[p], best_f] > best_t:
                order[hi - s] = idx[p]
                hi += 1
        for p in range(n):
            idx[s + p] = order[p]
        # weighted impurity decrease: n*G(node) - nL*G(L) - nR*G(R)
        gain[node] = best_score - sumsq / n
        feature[node] = best_f
        threshold[node] = best_t
        l = n_nodes
        r = n_nodes + 1
        n_nodes += 2
        left[node] = l
        right[node] = r
        stack[top, 0] = r
        stack[top, 1] = lo
        stack[top, 2] = e
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = l
        stack[top, 1] = s
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1
    return n_nodes, feature, threshold, left, right, value, impurity, gain, count


def grow_gini(X, y, rows, n_classes, max_depth=None, min_samples_split=2, min_samples_leaf=1,
              max_features=None, seed=0) -> Tree:
    """Grow a CART classification tree on ``X[rows]`` (``rows`` may repeat)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    d = X.shape[1]
    mf = d if max_features is None else int(max_features)
    out = _grow_gini(X, np.ascontiguousarray(y, dtype=np.int64),
                     np.ascontiguousarray(rows, dtype=np.int64), int(n_classes),
                     -1 if max_depth is None else int(max_depth), int(min_samples_split),
                     int(min_samples_leaf), max(1, min(mf, d)), int(seed) % (2**32))
    return _finish(*out)


@njit(cache=True, nogil=True)
def _grow_newton(X, g, h, hs, rows, allowed, lam, gamma, min_child_weight, max_depth,
                 min_samples_split, min_samples_leaf, max_features, leaf_scale, seed):
    np.random.seed(seed)
    n_features = allowed.shape[0]
    cap = 2 * rows.shape[0] + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, 1))
    impurity = np.zeros(cap)
    gain = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    idx = rows.copy()
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = idx.shape[0]
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    feats = np.empty(n_features, dtype=np.int64)
    vals = np.empty(idx.shape[0])
    order = np.empty(idx.shape[0], dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        s = stack[top, 1]
        e = stack[top, 2]
        depth = stack[top, 3]
        n = e - s
        G = 0.0
        H = 0.0
        HS = 0.0
        for p in range(s, e):
            G += g[idx[p]]
            H += h[idx[p]]
            HS += hs[idx[p]]
        if H + lam < 1e-150:
            value[node, 0] = 0.0
        else:
            value[node, 0] = -leaf_scale * G / (H + lam)
        count[node] = n

        if ((max_depth >= 0 and depth >= max_depth) or n < min_samples_split
                or n < 2 * min_samples_leaf):
            continue

        parent = G * G / (HS + lam)
        best = 0.0
        best_f = -1
        best_t = 0.0
        for i in range(n_features):
            feats[i] = allowed[i]
        visited = 0
        for i in range(n_features):
            if visited >= max_features:
                break
            jj = i + np.random.randint(n_features - i)
            tmp = feats[i]
            feats[i] = feats[jj]
            feats[jj] = tmp
            f = feats[i]
            for p in range(n):
                vals[p] = X[idx[s + p], f]
            o = np.argsort(vals[:n], kind="mergesort")
            if vals[o[0]] == vals[o[n - 1]]:
                continue
            visited += 1
            GL = 0.0
            HL = 0.0
            for p in range(n - 1):
                r = idx[s + o[p]]
                GL += g[r]
                HL += hs[r]
                a = vals[o[p]]
                b = vals[o[p + 1]]
                if a == b:
                    continue
                nl = p + 1
                if nl < min_samples_leaf or n - nl < min_samples_leaf:
                    continue
                HR = HS - HL
                if HL < min_child_weight or HR < min_child_weight:
                    continue
                GR = G - GL
                score = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent) - gamma
                if score > best + 1e-12:
                    best = score
                    best_f = f
                    best_t = _midpoint(a, b)

        if best_f < 0:
            continue
        lo = s
        for p in range(s, e):
            if X[idx[p], best_f] <= best_t:
                order[lo - s] = idx[p]
                lo += 1
        hi = lo
        for p in range(s, e):
            if X[idx[p], best_f] > best_t:
                order[hi - s] = idx[p]
                hi += 1
        for p in range(n):
            idx[s + p] = order[p]
        gain[node] = best + gamma
        feature[node] = best_f
        threshold[node] = best_t
        l = n_nodes
        rr = n_nodes + 1
        n_nodes += 2
        left[node] = l
        right[node] = rr
        stack[top, 0] = rr
        stack[top, 1] = lo
        stack[top, 2] = e
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = l
        stack[top, 1] = s
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1
    return n_nodes, feature, threshold, left, right, value, impurity, gain, count


def grow_newton(X, g, h, rows, *, split_hessian=None, lam=0.0, gamma=0.0, min_child_weight=0.0,
                max_depth=3, min_samples_split=2, min_samples_leaf=1, max_features=None,
                allowed_features=None, leaf_scale=1.0, seed=0) -> Tree:
    """Grow a regression tree from gradient/hessian statistics.

    ``split_hessian`` replaces ``h`` in the split gain and the
    ``min_child_weight`` check (pass ones to split on squared error of the
    residuals while keeping Newton leaf values).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    hs = h if split_hessian is None else np.ascontiguousarray(split_hessian, dtype=np.float64)
    allowed = (np.arange(X.shape[1]) if allowed_features is None
               else np.ascontiguousarray(allowed_features, dtype=np.int64))
    mf = allowed.shape[0] if max_features is None else int(max_features)
    out = _grow_newton(X, g, h, hs, np.ascontiguousarray(rows, dtype=np.int64), allowed,
                       float(lam), float(gamma), float(min_child_weight),
                       -1 if max_depth is None else int(max_depth), int(min_samples_split),
                       int(min_samples_leaf), max(1, min(mf, allowed.shape[0])),
                       float(leaf_scale), int(seed) % (2**32))
    return _finish(*out)
