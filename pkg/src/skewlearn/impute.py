"""Round-robin chained-equations imputation with ridge conditional models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tabular import ColumnKind, DataError, TabularDataset

# ceiling tolerance so that float noise like 3.0000000000004 still maps to 3
_CEIL_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ColumnRegression:
    column: int
    predictors: np.ndarray
    coef: np.ndarray
    intercept: float


@dataclass(frozen=True, eq=False)
class ImputerModel:
    """Fitted iterative imputer.

    Attributes
    ----------
    columns : indices of the numeric/ordinal columns taking part
    fill_values : initial fill (column mean over observed cells), indexed by column
    scales : observed standard deviation per column, used for the stopping rule
    regressions : one :class:`ColumnRegression` per column with missing cells
    visit_order : column indices in the order regressions are applied
    """

    n_cols: int
    columns: tuple
    kinds: tuple
    fill_values: np.ndarray
    scales: np.ndarray
    regressions: tuple
    visit_order: tuple
    iteration_count: int
    ridge_lambda: float
    tol: float
    converged: bool
    rounding: str = "ceil"

    def transform(self, ds: TabularDataset) -> TabularDataset:
        return transform(self, ds)


def _ridge(A, y, lam):
    """Ridge fit with an unpenalised intercept on standardized predictors."""
    mu = A.mean(axis=0)
    sd = A.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (A - mu) / sd
    ym = y.mean()
    G = Z.T @ Z + lam * np.eye(Z.shape[1])
    beta = np.linalg.solve(G, Z.T @ (y - ym))
    coef = beta / sd
    intercept = ym - mu @ coef
    return coef, float(intercept)


def _iterate(X, missing, order, regressions, scales, max_iters, tol, refit, lam):
    converged = False
    it = 0
    cols = list(range(X.shape[1]))
    for it in range(1, max_iters + 1):
        change = 0.0
        for pos, j in enumerate(order):
            rows = missing[:, j]
            preds = np.array([c for c in cols if c != j], dtype=np.int64)
            if refit:
                obs = ~rows
                coef, b = _ridge(X[obs][:, preds], X[obs, j], lam)
                regressions[pos] = ColumnRegression(j, preds, coef, b)
            reg = regressions[pos]
            new = X[rows][:, reg.predictors] @ reg.coef + reg.intercept
            if not np.all(np.isfinite(new)):
                raise DataError(f"non-finite imputed values in column {j}")
            if new.size:
                change = max(change, float(np.max(np.abs(new - X[rows, j])) / scales[j]))
            X[rows, j] = new
        if change <= tol:
            converged = True
            break
    return it, converged


def fit_imputer(train: TabularDataset, max_iters: int = 10, tol: float = 1e-3,
                ridge_lambda: float = 1e-3, seed=0, rounding: str = "ceil") -> ImputerModel:
    """Fit the imputer on the numeric and ordinal-integer columns of ``train``.

    Missing cells start at the column mean.  Each pass regresses every
    incomplete column (most-missing first) on all other participating
    columns using the rows where it is observed, then overwrites its missing
    cells with the predictions.  Passes stop once the largest change of any
    imputed cell, in units of that column's standard deviation, is at most
    ``tol``.

    ``seed`` is accepted for interface symmetry; the procedure has no
    random steps.
    """
    if rounding not in ("ceil", "nearest"):
        raise ValueError("rounding must be 'ceil' or 'nearest'")
    if ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be > 0")
    cols = tuple(train.columns_of_kind(ColumnKind.NUMERIC, ColumnKind.ORDINAL))
    kinds = tuple(train.columns[j].kind for j in cols)
    X = train.values[:, cols].copy()
    missing = np.isnan(X)
    observed = ~missing
    n_obs = observed.sum(axis=0)
    if np.any(n_obs == 0):
        bad = [train.columns[cols[i]].name for i in np.flatnonzero(n_obs == 0)]
        raise DataError(f"columns {bad} are entirely missing")
    fill = np.array([X[observed[:, i], i].mean() for i in range(len(cols))])
    scales = np.array([X[observed[:, i], i].std() for i in range(len(cols))])
    scales[scales == 0] = 1.0
    miss_count = missing.sum(axis=0)
    # stable sort: ties keep column order
    order = tuple(int(i) for i in np.argsort(-miss_count, kind="stable") if miss_count[i] > 0)

    X[missing] = np.take(fill, np.nonzero(missing)[1])
    regressions = [None] * len(order)
    iters, converged = 0, True
    if order and len(cols) > 1:
        iters, converged = _iterate(X, missing, order, regressions, scales,
                                    max_iters, tol, True, ridge_lambda)
    elif order:
        # a lone column has no predictors: keep the mean fill
        regressions = [ColumnRegression(order[0], np.empty(0, dtype=np.int64), np.empty(0), float(fill[order[0]]))]
    return ImputerModel(train.n_cols, cols, kinds, fill, scales, tuple(regressions), order,
                        iters, ridge_lambda, tol, converged, rounding)


def _round(v, rounding):
    if rounding == "ceil":
        return np.ceil(v - _CEIL_SLACK)
    return np.floor(v + 0.5)


def transform(model: ImputerModel, ds: TabularDataset) -> TabularDataset:
    """Fill every missing numeric/ordinal cell of ``ds``.

    Imputed cells of ordinal-integer columns are rounded up to the next
    integer (or to the nearest one when the model was fitted with
    ``rounding="nearest"``).  Observed cells are never modified.
    """
    if ds.n_cols != model.n_cols or tuple(ds.columns[j].kind for j in model.columns) != model.kinds:
        raise DataError("dataset schema does not match the fitted imputer")
    X = ds.values[:, model.columns].copy()
    missing = np.isnan(X)
    if not missing.any():
        return ds
    X[missing] = np.take(model.fill_values, np.nonzero(missing)[1])
    # only columns that have a fitted regression are iterated; others keep the mean
    fitted = {r.column: r for r in model.regressions if r is not None}
    order = [j for j in model.visit_order if j in fitted and missing[:, j].any()]
    if order and len(model.columns) > 1:
        regs = [fitted[j] for j in order]
        _iterate(X, missing, order, regs, model.scales, max(model.iteration_count, 1),
                 model.tol, False, model.ridge_lambda)
    for i, kind in enumerate(model.kinds):
        if kind is ColumnKind.ORDINAL and missing[:, i].any():
            X[missing[:, i], i] = _round(X[missing[:, i], i], model.rounding)
    values = ds.values.copy()
    values[:, model.columns] = X
    return ds.with_values(values, tokens=dict(ds.tokens))


def fit_transform(train: TabularDataset, **kwargs) -> tuple[ImputerModel, TabularDataset]:
    model = fit_imputer(train, **kwargs)
    return model, transform(model, train)


def mean_impute(ds: TabularDataset) -> np.ndarray:
    """Column-mean fill of the numeric matrix; a baseline for comparison."""
    X = ds.values.copy()
    mu = np.nanmean(X, axis=0)
    idx = np.nonzero(np.isnan(X))
    X[idx] = mu[idx[1]]
    return X
