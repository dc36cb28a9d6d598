"""Six classifier families behind one ``fit`` / ``score`` interface.

>>> spec = LearnerSpec("random_forest", {"n_estimators": 50}, seed=1)
>>> model = fit(spec, X, y)                         # doctest: +SKIP
>>> proba = score(model, X_test)                    # doctest: +SKIP

``score`` returns class probabilities for every family except ``svm_rbf``,
which returns one-vs-rest decision values.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..tabular import TabularDataset
from ._common import ConvergenceError, FitError
from .boosting import BoostingModel, fit_boosting
from .forest import ForestModel, fit_forest
from .logreg import LogRegModel, fit_logreg
from .mlp import BaggedMLPModel, fit_bagged_mlp
from .svm import SVMModel, fit_svm

__all__ = [
    "Family", "LearnerSpec", "TrainedModel", "FitError", "ConvergenceError", "ParamError",
    "fit", "score", "predict", "feature_importance", "default_params", "PARAM_SPACE",
    "PROBABILISTIC",
]


class ParamError(ValueError):
    """Unknown hyperparameter key or out-of-range value."""


class Family(str, enum.Enum):
    LOGREG = "logreg"
    RANDOM_FOREST = "random_forest"
    GBT = "gbt"
    GBT_XGB = "gbt_xgb_mode"
    MLP_BAGGING = "mlp_bagging"
    SVM_RBF = "svm_rbf"


PROBABILISTIC = frozenset(f for f in Family if f is not Family.SVM_RBF)


def _none(v):
    return v is None or (isinstance(v, str) and v.lower() == "none")


def _int(lo, allow_none=False):
    def check(v):
        if allow_none and _none(v):
            return None
        if isinstance(v, bool) or not float(v).is_integer() or int(v) < lo:
            raise ParamError(f"expected an integer >= {lo}" + (" or none" if allow_none else ""))
        return int(v)
    return check


def _real(lo, hi, lo_open=False):
    def check(v):
        v = float(v)
        if not math.isfinite(v) or v > hi or v < lo or (lo_open and v == lo):
            raise ParamError(f"expected a real in {'(' if lo_open else '['}{lo}, {hi}]")
        return v
    return check


def _choice(*options):
    def check(v):
        key = None if _none(v) else v
        if key not in options:
            raise ParamError(f"expected one of {options}")
        return key
    return check


# key -> (validator, default); keys follow the hyperparameter table of each family
PARAM_SPACE: dict[Family, dict[str, tuple]] = {
    Family.RANDOM_FOREST: {
        "n_estimators": (_int(1), 100),
        "max_features": (_choice("sqrt", "log2", None), "sqrt"),
        "max_depth": (_int(1, allow_none=True), None),
        "min_samples_split": (_int(2), 2),
        "min_samples_leaf": (_int(1), 1),
    },
    Family.GBT_XGB: {
        "n_estimators": (_int(1), 100),
        "learning_rate": (_real(0, 1, lo_open=True), 0.1),
        "max_depth": (_int(1), 3),
        "min_child_weight": (_real(0, math.inf), 1.0),
        "gamma": (_real(0, math.inf), 0.0),
        "subsample": (_real(0, 1, lo_open=True), 1.0),
        "colsample_bytree": (_real(0, 1, lo_open=True), 1.0),
    },
    Family.GBT: {
        "n_estimators": (_int(1), 100),
        "learning_rate": (_real(0, 1, lo_open=True), 0.1),
        "max_depth": (_int(1), 3),
        "min_samples_split": (_int(2), 2),
        "min_samples_leaf": (_int(1), 1),
        "max_features": (_choice("sqrt", "log2", None), None),
        "subsample": (_real(0, 1, lo_open=True), 1.0),
    },
    Family.SVM_RBF: {
        "kernel": (_choice("rbf"), "rbf"),
        "c": (_real(0, math.inf, lo_open=True), 10.0),
        "decision_function_shape": (_choice("ovr"), "ovr"),
        "gamma": (_real(0, math.inf, lo_open=True), 0.01),
    },
    Family.MLP_BAGGING: {
        "max_iteration": (_int(1), 1000),
        "initial_learning_rate": (_real(0, math.inf, lo_open=True), 0.001),
        "n_estimators": (_int(1), 10),
        "solver": (_choice("adam"), "adam"),
        "estimator": (_choice("base_mlp"), "base_mlp"),
    },
    Family.LOGREG: {
        "c": (_real(0, math.inf, lo_open=True), 1.0),
        "max_iterations": (_int(1), 100),
        "solver": (_choice("newton-cg", "lbfgs", "sag", "saga"), "lbfgs"),
    },
}


def default_params(family) -> dict:
    return {k: d for k, (_, d) in PARAM_SPACE[Family(family)].items()}


def validate_params(family, params) -> dict:
    family = Family(family)
    space = PARAM_SPACE[family]
    unknown = set(params) - set(space)
    if unknown:
        raise ParamError(f"unknown parameter(s) for {family.value}: {sorted(unknown)}")
    out = default_params(family)
    for k, v in params.items():
        try:
            out[k] = space[k][0](v)
        except (ParamError, TypeError, ValueError) as exc:
            raise ParamError(f"{family.value}.{k}={v!r}: {exc}") from None
    return out


@dataclass(frozen=True)
class LearnerSpec:
    family: Family
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise ParamError(f"unknown learner family {self.family!r}; "
                             f"choose from {[f.value for f in Family]}") from None
        object.__setattr__(self, "params", validate_params(self.family, self.params))


@dataclass(frozen=True, eq=False)
class TrainedModel:
    family: Family
    params: dict
    state: Any
    n_features: int
    n_classes: int

    @property
    def probabilistic(self) -> bool:
        return self.family in PROBABILISTIC


def _coerce(data, labels, n_classes):
    if isinstance(data, TabularDataset):
        if not data.is_complete():
            raise FitError("features must be complete and numeric (impute and encode first)")
        return data.values, data.labels, data.class_count
    X = np.asarray(data, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    return X, y, int(y.max()) + 1 if n_classes is None else int(n_classes)


def fit(spec: LearnerSpec, data, labels=None, n_classes=None) -> TrainedModel:
    """Train ``spec`` on a complete dataset (or an ``(X, y)`` pair)."""
    X, y, C = _coerce(data, labels, n_classes)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise FitError("feature matrix and labels disagree in length")
    if not np.all(np.isfinite(X)):
        raise FitError("non-finite feature values")
    if C < 2:
        raise FitError("need at least two classes")
    p = spec.params
    f = spec.family
    if f is Family.LOGREG:
        state = fit_logreg(X, y, C, c=p["c"], max_iterations=p["max_iterations"], solver=p["solver"])
    elif f is Family.RANDOM_FOREST:
        state = fit_forest(X, y, C, n_estimators=p["n_estimators"], max_features=p["max_features"],
                           max_depth=p["max_depth"], min_samples_split=p["min_samples_split"],
                           min_samples_leaf=p["min_samples_leaf"], seed=spec.seed)
    elif f is Family.GBT:
        state = fit_boosting(X, y, C, mode="gbt", n_estimators=p["n_estimators"],
                             learning_rate=p["learning_rate"], max_depth=p["max_depth"],
                             min_samples_split=p["min_samples_split"],
                             min_samples_leaf=p["min_samples_leaf"], max_features=p["max_features"],
                             subsample=p["subsample"], seed=spec.seed)
    elif f is Family.GBT_XGB:
        state = fit_boosting(X, y, C, mode="xgb", n_estimators=p["n_estimators"],
                             learning_rate=p["learning_rate"], max_depth=p["max_depth"],
                             min_child_weight=p["min_child_weight"], gamma=p["gamma"],
                             subsample=p["subsample"], colsample_bytree=p["colsample_bytree"],
                             seed=spec.seed)
    elif f is Family.MLP_BAGGING:
        state = fit_bagged_mlp(X, y, C, n_estimators=p["n_estimators"],
                               max_iteration=p["max_iteration"],
                               initial_learning_rate=p["initial_learning_rate"], seed=spec.seed)
    else:
        state = fit_svm(X, y, C, c=p["c"], gamma=p["gamma"], kernel=p["kernel"],
                        decision_function_shape=p["decision_function_shape"])
    return TrainedModel(f, dict(p), state, X.shape[1], C)


def score(model: TrainedModel, x) -> np.ndarray:
    """Per-class scores for one row (shape ``(C,)``) or many (``(n, C)``)."""
    X = np.asarray(x.values if isinstance(x, TabularDataset) else x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    s = model.state
    out = s.decision(X) if isinstance(s, SVMModel) else s.proba(X)
    return out[0] if single else out


def predict(model: TrainedModel, x) -> np.ndarray:
    """Arg-max class; ties go to the lowest class id."""
    return np.argmax(score(model, x), axis=-1)


def feature_importance(model: TrainedModel) -> np.ndarray:
    """Normalized split-gain totals for tree models; mean |coefficient| for logreg."""
    s = model.state
    if isinstance(s, (ForestModel, BoostingModel)):
        return s.importances()
    if isinstance(s, LogRegModel):
        return np.abs(s.coef).mean(axis=0)
    raise ValueError(f"feature importance is not defined for {model.family.value}")
