"""One-vs-rest soft-margin SVMs with an RBF kernel, solved by SMO.

The binary solver minimises ``1/2 a^T Q a - e^T a`` subject to
``0 <= a_i <= C`` and ``y^T a = 0`` with ``Q_ij = y_i y_j K(x_i, x_j)``.
Working pairs are chosen by maximal violation for ``i`` and second-order
gain for ``j``; the solver stops when the maximal KKT violation gap drops
below ``tol``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._common import FitError

TAU = 1e-12


def rbf_kernel(A, B, gamma):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        # i: maximal violator in I_up
        Gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C and -G[t] >= Gmax:
                    Gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] >= Gmax:
                    Gmax = G[t]
                    i = t
        Gmax2 = -np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0:
                    if G[t] >= Gmax2:
                        Gmax2 = G[t]
                    diff = Gmax + G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        obj = -(diff * diff) / quad
                        if obj <= best:
                            best = obj
                            j = t
            else:
                if alpha[t] < C:
                    if -G[t] >= Gmax2:
                        Gmax2 = -G[t]
                    diff = Gmax - G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        obj = -(diff * diff) / quad
                        if obj <= best:
                            best = obj
                            j = t
        if Gmax + Gmax2 < tol or j < 0:
            break
        it += 1

        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * dai + y[j] * K[t, j] * daj)

    # offset from free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yG = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            sfree += yG
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it


@dataclass(frozen=True, eq=False)
class BinarySVM:
    support: np.ndarray     # row indices into the training matrix
    dual_coef: np.ndarray   # alpha_i * y_i for the support rows
    rho: float
    n_iter: int


@dataclass(frozen=True, eq=False)
class SVMModel:
    support_vectors: np.ndarray
    machines: tuple
    gamma: float
    c: float

    def decision(self, X):
        X = np.asarray(X, dtype=float)
        K = rbf_kernel(X, self.support_vectors, self.gamma)
        return np.column_stack([K[:, m.support] @ m.dual_coef - m.rho for m in self.machines])


def solve_binary(K, y, c, tol=1e-3, max_iter=None):
    """Run SMO on a precomputed kernel; ``y`` in {-1, +1}.  Returns (alpha, rho, iterations)."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if max_iter is None:
        max_iter = max(10_000_000, 100 * n)
    return _smo(np.ascontiguousarray(K), y, float(c), float(tol), int(max_iter))


def fit_svm(X, y, n_classes, c=10.0, gamma=0.01, tol=1e-3, kernel="rbf",
            decision_function_shape="ovr") -> SVMModel:
    if kernel != "rbf":
        raise FitError("only the rbf kernel is supported")
    if decision_function_shape != "ovr":
        raise FitError("only one-vs-rest decision functions are supported")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    K = rbf_kernel(X, X, gamma)
    machines = []
    used = np.zeros(X.shape[0], dtype=bool)
    raw = []
    for cls in range(n_classes):
        yb = np.where(y == cls, 1.0, -1.0)
        alpha, rho, it = solve_binary(K, yb, c, tol)
        sv = np.flatnonzero(alpha > 0)
        used[sv] = True
        raw.append((sv, alpha[sv] * yb[sv], rho, it))
    # re-index support rows into the shared support-vector matrix
    rows = np.flatnonzero(used)
    pos = np.full(X.shape[0], -1)
    pos[rows] = np.arange(rows.size)
    for sv, coef, rho, it in raw:
        machines.append(BinarySVM(pos[sv], coef, float(rho), int(it)))
    return SVMModel(X[rows].copy(), tuple(machines), float(gamma), float(c))
