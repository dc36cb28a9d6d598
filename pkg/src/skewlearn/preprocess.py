"""Label encoding of categorical columns and z-score scaling."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .tabular import ColumnKind, DataError, TabularDataset


@dataclass(frozen=True)
class EncoderModel:
    """Per-column token -> code maps.

    ``fallback`` holds, per column, the code used for missing cells (the most
    frequent training token, ties going to the lexicographically smaller one).
    """

    maps: dict
    fallback: dict
    unknown: str = "error"

    def vocabulary_size(self, column: int) -> int:
        return len(self.maps[column])


@dataclass(frozen=True, eq=False)
class ScalerModel:
    mean: np.ndarray
    scale: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.scale == 0

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z * self.scale + self.mean


def fit_encoder(train: TabularDataset, unknown: str = "error") -> EncoderModel:
    if unknown not in ("error", "reserve_code"):
        raise ValueError("unknown must be 'error' or 'reserve_code'")
    maps, fallback = {}, {}
    for j, col in train.tokens.items():
        seen = [t for t in col if t is not None]
        vocab = sorted(set(seen))
        maps[j] = {t: i for i, t in enumerate(vocab)}
        if seen:
            counts = Counter(seen)
            top = max(counts.values())
            fallback[j] = maps[j][min(t for t, c in counts.items() if c == top)]
        else:
            fallback[j] = 0
    return EncoderModel(maps, fallback, unknown)


def encode(encoder: EncoderModel, ds: TabularDataset) -> TabularDataset:
    """Replace raw categorical tokens by their integer codes."""
    if set(ds.tokens) != set(encoder.maps):
        raise DataError("categorical columns do not match the fitted encoder")
    values = ds.values.copy()
    for j, col in ds.tokens.items():
        m = encoder.maps[j]
        codes = np.empty(len(col))
        for r, t in enumerate(col):
            if t is None:
                codes[r] = encoder.fallback[j]
            elif t in m:
                codes[r] = m[t]
            elif encoder.unknown == "reserve_code":
                codes[r] = len(m)
            else:
                raise DataError(f"unknown token {t!r} in column {ds.columns[j].name!r}")
        values[:, j] = codes
    return ds.with_values(values)


def fit_scaler(train: TabularDataset, encoder: EncoderModel | None = None) -> ScalerModel:
    """Column means and population standard deviations.

    Categorical columns must be encoded first (pass ``encoder`` to do it
    here); encoded codes are scaled like any other numeric column.
    """
    if train.tokens:
        if encoder is None:
            raise DataError("categorical columns must be encoded before scaling")
        train = encode(encoder, train)
    X = train.values
    if np.isnan(X).any():
        raise DataError("scaler requires a complete dataset")
    if X.shape[1] == 0:
        return ScalerModel(np.zeros(0), np.zeros(0))
    return ScalerModel(X.mean(axis=0), X.std(axis=0))


def apply(encoder: EncoderModel | None, scaler: ScalerModel | None, ds: TabularDataset) -> TabularDataset:
    """Encode then standardize ``ds``; constant columns map to 0.

    The result has every column typed numeric, since downstream learners
    treat codes and ordinal scores as plain reals.
    """
    if ds.tokens:
        if encoder is None:
            raise DataError("dataset has raw categorical tokens but no encoder was given")
        ds = encode(encoder, ds)
    X = ds.values
    if scaler is not None and X.shape[1]:
        if scaler.mean.shape[0] != X.shape[1]:
            raise DataError("dataset width does not match the fitted scaler")
        safe = np.where(scaler.constant, 1.0, scaler.scale)
        X = np.where(scaler.constant, 0.0, (X - scaler.mean) / safe)
    cols = tuple(type(c)(c.name, ColumnKind.NUMERIC) for c in ds.columns)
    return ds.with_values(X, columns=cols)
