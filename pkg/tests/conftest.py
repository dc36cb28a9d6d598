import numpy as np
import pytest

from skewlearn.tabular import ColumnKind, ColumnMeta, TabularDataset


def make_ds(X, y, class_count=None, kinds=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    kinds = kinds or [ColumnKind.NUMERIC] * X.shape[1]
    cols = tuple(ColumnMeta(f"x{j}", kinds[j]) for j in range(X.shape[1]))
    return TabularDataset(cols, X, y, int(y.max()) + 1 if class_count is None else class_count)


def blobs(counts, d=4, sep=3.0, seed=0):
    """Gaussian clusters with one mean per class, shuffled."""
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(len(counts)), counts)
    mu = rng.normal(0, sep, (len(counts), d))
    X = mu[y] + rng.standard_normal((y.size, d))
    p = rng.permutation(y.size)
    return X[p], y[p]


def brute_knn_radius(Xc, i, k):
    """Distance to the k-th nearest other row of ``Xc`` from row ``i``, by exhaustive search."""
    d = np.sqrt(((Xc - Xc[i]) ** 2).sum(axis=1))
    d[i] = np.inf
    return np.sort(d)[k - 1], d


def mann_whitney_auc(pos, neg):
    """Correctly ordered positive/negative pairs plus half the ties, over all pairs."""
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def central_diff(f, x, h=1e-5):
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        gf[i] = (up - down) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


# -- acceptance summary -------------------------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed at session end."""
    def record(number, title, ok, detail):
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}")
