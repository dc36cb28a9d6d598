"""Random oversampling and SMOTE, with per-row provenance.

Both samplers pad every class up to the majority count.  Output rows are the
input rows in their original order followed by the new rows, class by class.
Each class draws from its own seeded substream, so the result does not
depend on the order classes are processed in.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .tabular import DataError, TabularDataset


class Strategy(str, enum.Enum):
    NONE = "none"
    RANDOM_OVER = "random_over"
    SMOTE = "smote"


ORIGINAL, DUPLICATE, SYNTHETIC = 0, 1, 2


@dataclass(frozen=True)
class ResampleSpec:
    strategy: Strategy = Strategy.RANDOM_OVER
    k_neighbors: int = 5
    target: str = "match_majority"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.target != "match_majority":
            raise ValueError("only target='match_majority' is supported")


@dataclass(frozen=True, eq=False)
class Provenance:
    """Where each output row came from.

    ``kind`` is ORIGINAL, DUPLICATE or SYNTHETIC.  ``source`` is the input
    row index (for originals, the row itself; for duplicates, the copied
    row; for synthetic rows, the seed row x_i).  ``neighbor`` and ``delta``
    are only meaningful for synthetic rows: the row is
    ``x[source] + delta * (x[neighbor] - x[source])``.
    """

    kind: np.ndarray
    source: np.ndarray
    neighbor: np.ndarray
    delta: np.ndarray

    def counts(self) -> dict:
        return {"original": int(np.sum(self.kind == ORIGINAL)),
                "duplicate": int(np.sum(self.kind == DUPLICATE)),
                "synthetic": int(np.sum(self.kind == SYNTHETIC))}


@dataclass(frozen=True, eq=False)
class ResampledSet:
    dataset: TabularDataset
    provenance: Provenance


def _class_streams(seed, class_count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(class_count)]


def _identity_provenance(n):
    idx = np.arange(n)
    return idx, np.zeros(n, dtype=np.int8), np.full(n, -1), np.zeros(n)


def _assemble(train, new_rows, new_labels, kinds, sources, neighbors, deltas):
    n = train.n_rows
    _, k0, nb0, d0 = _identity_provenance(n)
    values = np.vstack([train.values] + new_rows) if new_rows else train.values
    labels = np.concatenate([train.labels] + new_labels) if new_labels else train.labels
    prov = Provenance(
        np.concatenate([k0] + kinds).astype(np.int8),
        np.concatenate([np.arange(n)] + sources).astype(np.int64),
        np.concatenate([nb0] + neighbors).astype(np.int64),
        np.concatenate([d0] + deltas).astype(float),
    )
    ds = TabularDataset(train.columns, values, labels, train.class_count,
                        label_names=train.label_names, name=train.name)
    return ResampledSet(ds, prov)


def no_resample(train: TabularDataset) -> ResampledSet:
    return _assemble(train, [], [], [], [], [], [])


def random_oversample(train: TabularDataset, spec: ResampleSpec | None = None, seed=None) -> ResampledSet:
    """Pad minority classes by drawing their own rows uniformly with replacement."""
    if train.tokens:
        raise DataError("encode categorical columns before resampling")
    seed = (spec.seed if spec is not None else 0) if seed is None else seed
    counts = train.class_counts()
    if np.any(counts == 0):
        raise DataError("empty class")
    target = counts.max()
    streams = _class_streams(seed, train.class_count)
    rows, labels, kinds, sources, nbs, deltas = [], [], [], [], [], []
    for c in range(train.class_count):
        need = int(target - counts[c])
        if need == 0:
            continue
        members = np.flatnonzero(train.labels == c)
        pick = members[streams[c].integers(0, members.size, size=need)]
        rows.append(train.values[pick])
        labels.append(np.full(need, c))
        kinds.append(np.full(need, DUPLICATE))
        sources.append(pick)
        nbs.append(np.full(need, -1))
        deltas.append(np.zeros(need))
    return _assemble(train, rows, labels, kinds, sources, nbs, deltas)


def class_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """Indices (into ``X``) of each row's ``k`` nearest other rows.

    Euclidean distance; equal distances go to the lower row index.
    """
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, np.inf)
    # exact recomputation would be costly; round off cancellation noise so
    # that genuinely tied distances compare equal
    D = np.round(D, 10)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def smote(train: TabularDataset, spec: ResampleSpec | None = None, seed=None) -> ResampledSet:
    """Synthesize minority rows on segments between in-class nearest neighbours.

    For each new row of class ``c``: draw a class-``c`` row ``x_i``
    uniformly, draw ``x_j`` uniformly among its ``k_neighbors`` nearest
    class-``c`` rows, draw ``delta ~ U[0, 1]`` and emit
    ``x_i + delta * (x_j - x_i)``.
    """
    spec = ResampleSpec(Strategy.SMOTE) if spec is None else spec
    seed = spec.seed if seed is None else seed
    k = spec.k_neighbors
    if train.tokens:
        raise DataError("encode categorical columns before resampling")
    if not np.all(np.isfinite(train.values)):
        raise DataError("SMOTE needs complete, finite features")
    counts = train.class_counts()
    target = counts.max()
    streams = _class_streams(seed, train.class_count)
    rows, labels, kinds, sources, nbs, deltas = [], [], [], [], [], []
    for c in range(train.class_count):
        need = int(target - counts[c])
        if need == 0:
            continue
        if counts[c] <= k:
            raise DataError(f"class {c} has {counts[c]} rows; SMOTE needs more than k_neighbors={k}")
        members = np.flatnonzero(train.labels == c)
        Xc = train.values[members]
        nn = class_neighbors(Xc, k)
        rng = streams[c]
        i = rng.integers(0, members.size, size=need)
        j = nn[i, rng.integers(0, k, size=need)]
        delta = rng.random(need)
        rows.append(Xc[i] + delta[:, None] * (Xc[j] - Xc[i]))
        labels.append(np.full(need, c))
        kinds.append(np.full(need, SYNTHETIC))
        sources.append(members[i])
        nbs.append(members[j])
        deltas.append(delta)
    return _assemble(train, rows, labels, kinds, sources, nbs, deltas)


def resample(train: TabularDataset, spec: ResampleSpec, seed=None) -> ResampledSet:
    strategy = Strategy(spec.strategy)
    if strategy is Strategy.NONE:
        return no_resample(train)
    if strategy is Strategy.RANDOM_OVER:
        return random_oversample(train, spec, seed)
    return smote(train, spec, seed)
