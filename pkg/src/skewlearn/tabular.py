"""Labeled tabular datasets with per-cell missingness.

A :class:`TabularDataset` holds a float matrix where ``NaN`` marks a missing
numeric cell, plus raw string tokens for categorical columns that have not
been encoded yet.  Datasets are immutable; every operation returns a new one.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data (bad CSV rows, impossible splits, ...)."""


class ColumnKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    ORDINAL = "ordinal-integer"


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: ColumnKind = ColumnKind.NUMERIC

    def __post_init__(self):
        object.__setattr__(self, "kind", ColumnKind(self.kind))


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Feature matrix, class labels and column metadata.

    Parameters
    ----------
    columns : sequence of ColumnMeta
    values : array of shape (n_rows, n_cols)
        Float values; ``NaN`` is a missing cell.  Categorical columns that
        still carry raw tokens hold ``NaN`` here and their text in ``tokens``.
    labels : array of shape (n_rows,)
        Dense class ids in ``0..class_count-1``.
    class_count : int
    tokens : dict mapping column index to an object array of ``str | None``
        Raw categorical tokens (``None`` = missing).  Empty once encoded.
    label_names : original label token for each class id.
    """

    columns: tuple
    values: np.ndarray
    labels: np.ndarray
    class_count: int
    tokens: dict = field(default_factory=dict)
    label_names: tuple = ()
    name: str = ""

    def __post_init__(self):
        cols = tuple(c if isinstance(c, ColumnMeta) else ColumnMeta(*c) for c in self.columns)
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names: {names}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            values = values.reshape(len(self.labels), len(cols))
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.shape != (labels.shape[0], len(cols)):
            raise DataError(
                f"values shape {values.shape} inconsistent with "
                f"{labels.shape[0]} labels and {len(cols)} columns")
        if self.class_count < 2:
            raise DataError("class_count must be >= 2")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise DataError("label id out of range")
        present = np.bincount(labels, minlength=self.class_count)
        if np.any(present == 0):
            missing = np.flatnonzero(present == 0).tolist()
            raise DataError(f"classes {missing} have no rows")
        tokens = {}
        for j, col in self.tokens.items():
            arr = np.asarray(col, dtype=object)
            if arr.shape != (labels.shape[0],):
                raise DataError(f"token column {j} has wrong length")
            arr.setflags(write=False)
            tokens[int(j)] = arr
        label_names = tuple(self.label_names) or tuple(str(c) for c in range(self.class_count))
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "label_names", label_names)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def missing_mask(self) -> np.ndarray:
        mask = np.isnan(self.values)
        for j, col in self.tokens.items():
            mask[:, j] = np.array([t is None for t in col], dtype=bool)
        return mask

    def is_complete(self) -> bool:
        return not self.tokens and not np.isnan(self.values).any()

    def columns_of_kind(self, *kinds) -> list[int]:
        kinds = {ColumnKind(k) for k in kinds}
        return [j for j, c in enumerate(self.columns) if c.kind in kinds]

    def subset(self, rows) -> "TabularDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            values=self.values[rows],
            labels=self.labels[rows],
            tokens={j: t[rows] for j, t in self.tokens.items()},
        )

    def with_values(self, values, tokens=None, columns=None) -> "TabularDataset":
        return replace(
            self,
            values=values,
            tokens={} if tokens is None else tokens,
            columns=self.columns if columns is None else columns,
        )

    def equals(self, other: "TabularDataset") -> bool:
        """Exact equality including the missingness mask and raw tokens."""
        if self.columns != other.columns or self.class_count != other.class_count:
            return False
        if self.values.shape != other.values.shape:
            return False
        if not np.array_equal(self.values, other.values, equal_nan=True):
            return False
        if not np.array_equal(self.labels, other.labels):
            return False
        if self.tokens.keys() != other.tokens.keys():
            return False
        return all(list(self.tokens[j]) == list(other.tokens[j]) for j in self.tokens)


def from_arrays(X, y, class_count=None, names=None, kinds=None, name="") -> TabularDataset:
    """Build a dataset from a numeric matrix and integer labels."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if names is None:
        names = [f"x{j}" for j in range(X.shape[1])]
    if kinds is None:
        kinds = [ColumnKind.NUMERIC] * X.shape[1]
    columns = tuple(ColumnMeta(n, k) for n, k in zip(names, kinds))
    C = int(y.max()) + 1 if class_count is None else class_count
    return TabularDataset(columns, X, y, C, name=name)


# -- CSV -------------------------------------------------------------------

def load_csv(path, schema: Sequence[ColumnMeta], label_column: str,
             missing_tokens: Iterable[str] = ("", "NA"),
             label_order: Sequence[str] | None = None, name: str | None = None) -> TabularDataset:
    """Read a CSV file with a mandatory header row.

    ``schema`` lists the feature columns (the label column is excluded).
    Label tokens must parse as non-negative integers; they are remapped to
    dense ids in ascending numeric order unless ``label_order`` is given.
    """
    path = Path(path)
    missing = set(missing_tokens)
    schema = [c if isinstance(c, ColumnMeta) else ColumnMeta(*c) for c in schema]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = {c.name for c in schema} | {label_column}
        if set(header) != expected or len(header) != len(expected):
            raise DataError(f"{path}: header {header} does not match schema names {sorted(expected)}")
        pos = {h: i for i, h in enumerate(header)}
        rows = list(reader)

    n, d = len(rows), len(schema)
    values = np.full((n, d), np.nan)
    tokens = {j: np.empty(n, dtype=object) for j, c in enumerate(schema)
              if c.kind is ColumnKind.CATEGORICAL}
    raw_labels = []
    for r, row in enumerate(rows):
        lineno = r + 2
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        tok = row[pos[label_column]].strip()
        try:
            lab = int(tok)
            if lab < 0:
                raise ValueError
        except ValueError:
            raise DataError(f"{path}: row {lineno}, column {label_column!r}: "
                            f"label {tok!r} is not a non-negative integer") from None
        raw_labels.append(lab)
        for j, col in enumerate(schema):
            cell = row[pos[col.name]]
            if col.kind is ColumnKind.CATEGORICAL:
                tokens[j][r] = None if cell in missing else cell
                continue
            if cell in missing or cell.strip() in missing:
                continue
            try:
                values[r, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {col.name!r}: "
                                f"cannot parse {cell!r} as a number") from None
            if not math.isfinite(values[r, j]):
                raise DataError(f"{path}: row {lineno}, column {col.name!r}: non-finite value")

    if label_order is None:
        label_order = [str(v) for v in sorted(set(raw_labels))]
    ids = {int(t): i for i, t in enumerate(label_order)}
    try:
        labels = np.array([ids[v] for v in raw_labels], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"{path}: unknown label token {exc.args[0]!r}") from None
    return TabularDataset(tuple(schema), values, labels, len(label_order), tokens,
                          tuple(label_order), name=path.stem if name is None else name)


def _format_value(v: float, kind: ColumnKind) -> str:
    if math.isnan(v):
        return ""
    if kind is ColumnKind.ORDINAL and float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_csv(ds: TabularDataset, path, label_column: str = "label") -> Path:
    """Write ``ds`` as CSV; missing cells become empty fields.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.column_names + [label_column])
        for r in range(ds.n_rows):
            row = []
            for j, col in enumerate(ds.columns):
                if j in ds.tokens:
                    t = ds.tokens[j][r]
                    row.append("" if t is None else t)
                else:
                    row.append(_format_value(ds.values[r, j], col.kind))
            row.append(ds.label_names[ds.labels[r]])
            w.writerow(row)
    return path


def infer_schema(path, label_column: str, missing_tokens=("", "NA")) -> list[ColumnMeta]:
    """Guess column kinds: integer-valued -> ordinal, float -> numeric, else categorical."""
    missing = set(missing_tokens)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    schema = []
    for i, name in enumerate(header):
        if name == label_column:
            continue
        cells = [row[i] for row in rows if i < len(row) and row[i] not in missing]
        kind = ColumnKind.ORDINAL
        for c in cells:
            try:
                v = float(c)
            except ValueError:
                kind = ColumnKind.CATEGORICAL
                break
            if not v.is_integer():
                kind = ColumnKind.NUMERIC
        schema.append(ColumnMeta(name, kind))
    return schema


# -- splitting -------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def holdout_counts(class_counts, test_fraction: float) -> np.ndarray:
    """Per-class test counts for a stratified holdout.

    Each class gets ``round_half_up(test_fraction * size)`` clamped to
    ``[1, size - 1]``; the largest class then absorbs the difference to the
    rounded overall total.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    if np.any(counts < 2):
        small = np.flatnonzero(counts < 2).tolist()
        raise DataError(f"classes {small} have fewer than 2 rows; cannot place one on each side")
    test = np.array([min(max(_round_half_up(test_fraction * c), 1), c - 1) for c in counts])
    big = int(np.argmax(counts))
    target = _round_half_up(test_fraction * counts.sum())
    test[big] = min(max(test[big] + target - test.sum(), 1), counts[big] - 1)
    return test


def stratified_holdout(ds: TabularDataset, test_fraction: float, seed) -> tuple[TabularDataset, TabularDataset]:
    """Split ``ds`` into (train, test) preserving class proportions."""
    train_idx, test_idx = holdout_indices(ds.labels, ds.class_count, test_fraction, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def holdout_indices(labels, class_count, test_fraction, seed):
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=class_count)
    n_test = holdout_counts(counts, test_fraction)
    rng = np.random.default_rng(seed)
    test = []
    for c in range(class_count):
        rows = np.flatnonzero(labels == c)
        test.append(rng.permutation(rows)[: n_test[c]])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(labels.size), test)
    return train, test


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def validation_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "assignments": self.assignments.tolist()}


def make_folds(ds_or_labels, k: int, seed, class_count: int | None = None) -> FoldPlan:
    """Stratified k-fold assignment.

    Rows of each class are shuffled and dealt round-robin; the dealing
    position carries over from one class to the next so that overall fold
    sizes also stay within one of each other.
    """
    if isinstance(ds_or_labels, TabularDataset):
        labels, class_count = ds_or_labels.labels, ds_or_labels.class_count
    else:
        labels = np.asarray(ds_or_labels)
        class_count = int(labels.max()) + 1 if class_count is None else class_count
    if k < 2:
        raise DataError("k must be >= 2")
    counts = np.bincount(labels, minlength=class_count)
    if np.any(counts < k):
        small = np.flatnonzero(counts < k).tolist()
        raise DataError(f"classes {small} have fewer than k={k} rows")
    rng = np.random.default_rng(seed)
    assignments = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for c in range(class_count):
        rows = rng.permutation(np.flatnonzero(labels == c))
        assignments[rows] = (offset + np.arange(rows.size)) % k
        offset = (offset + rows.size) % k
    assignments.setflags(write=False)
    return FoldPlan(k, assignments, int(seed))
