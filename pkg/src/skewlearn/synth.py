"""Synthetic imbalanced datasets: Gaussian class clusters, ordinal columns, MCAR holes."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .tabular import ColumnKind, ColumnMeta, TabularDataset

# per-class row counts of three cohorts (training split, before oversampling)
HEAD_NECK_COUNTS = (939, 657, 554, 304, 71)
PROSTATE_COUNTS = (1477, 767, 491, 339, 65)
BREAST_COUNTS = (1430, 555, 69)


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings.

    ``separation`` is the pairwise distance between class means in units of
    the within-class standard deviation.  ``correlation`` makes the
    within-class covariance equicorrelated, ``(1 - rho) I + rho 11^T``.
    """

    class_counts: tuple = BREAST_COUNTS
    dims: int = 24
    separation: float = 2.0
    ordinal_fraction: float = 0.5
    missing_rate: float = 0.0
    correlation: float = 0.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "class_counts", tuple(int(c) for c in self.class_counts))
        if len(self.class_counts) < 2 or min(self.class_counts) < 1:
            raise ValueError("need >= 2 classes with >= 1 row each")
        if self.dims < len(self.class_counts):
            raise ValueError("dims must be at least the number of classes")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if not 0.0 <= self.ordinal_fraction <= 1.0:
            raise ValueError("ordinal_fraction must be in [0, 1]")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ValueError("missing_rate must be in [0, 1)")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must be in [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_counts"] = list(self.class_counts)
        return d


def class_means(n_classes: int, dims: int, separation: float) -> np.ndarray:
    """Mean ``c`` sits at ``separation / sqrt(2) * e_c``, so every pair is ``separation`` apart."""
    mu = np.zeros((n_classes, dims))
    mu[np.arange(n_classes), np.arange(n_classes)] = separation / np.sqrt(2.0)
    return mu


def n_ordinal(spec: SynthSpec) -> int:
    return int(round(spec.ordinal_fraction * spec.dims))


def generate(spec: SynthSpec) -> TabularDataset:
    """Draw a dataset.

    Rows of class ``c`` come from ``N(mu_c, Sigma)``.  The last
    ``round(ordinal_fraction * dims)`` columns are mapped to a 1-5 scale by
    ``clip(round(x) + 3, 1, 5)``.  Each cell is then masked independently with
    probability ``missing_rate``, so the missing count is Binomial(cells, rate).
    """
    rng = np.random.default_rng(spec.seed)
    C, d = len(spec.class_counts), spec.dims
    mu = class_means(C, d, spec.separation)
    labels = np.repeat(np.arange(C), spec.class_counts)
    n = labels.size
    Z = rng.standard_normal((n, d))
    if spec.correlation > 0:
        shared = rng.standard_normal((n, 1))
        Z = np.sqrt(1.0 - spec.correlation) * Z + np.sqrt(spec.correlation) * shared
    X = mu[labels] + Z
    k = n_ordinal(spec)
    if k:
        X[:, d - k:] = np.clip(np.round(X[:, d - k:]) + 3.0, 1.0, 5.0)
    if spec.missing_rate > 0:
        X[rng.random((n, d)) < spec.missing_rate] = np.nan
    perm = rng.permutation(n)
    kinds = [ColumnKind.NUMERIC] * (d - k) + [ColumnKind.ORDINAL] * k
    columns = tuple(ColumnMeta(f"f{j:02d}", kinds[j]) for j in range(d))
    return TabularDataset(columns, X[perm], labels[perm], C, name=spec.name)


def complete_and_masked(spec: SynthSpec) -> tuple[TabularDataset, TabularDataset]:
    """The same draw with and without the missingness mask (ground truth for imputation)."""
    full = generate(SynthSpec(**{**spec.to_dict(), "missing_rate": 0.0}))
    rng = np.random.default_rng([spec.seed, 1])
    X = full.values.copy()
    X[rng.random(X.shape) < spec.missing_rate] = np.nan
    return full, full.with_values(X)
