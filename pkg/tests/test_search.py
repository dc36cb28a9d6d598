import math

import numpy as np
import pytest

from skewlearn.learners import ParamError
from skewlearn.resample import ResampleSpec, resample
from skewlearn.search import (HyperGrid, LeakageError, audit_split, evaluate_candidate,
                              grid_search, metric_value, unit_seeds)
from skewlearn.tabular import DataError, make_folds
from skewlearn.learners import LearnerSpec, fit, score

from conftest import blobs, make_ds

RF_GRID = {"n_estimators": [10, 50, 100, 200], "max_features": ["sqrt", "log2"],
           "max_depth": [None, 10, 20, 30, 40, 50], "min_samples_split": [2, 5, 10],
           "min_samples_leaf": [1, 2, 4]}


def _data(counts=(40, 20, 8), seed=0):
    X, y = blobs(counts, d=4, sep=1.5, seed=seed)
    return make_ds(X, y)


def test_table_grid_size_and_order():
    g = HyperGrid("random_forest", RF_GRID)
    cands = g.candidates()
    assert len(g) == len(cands) == 4 * 2 * 6 * 3 * 3 == 432
    assert cands[0] == {"n_estimators": 10, "max_features": "sqrt", "max_depth": None,
                        "min_samples_split": 2, "min_samples_leaf": 1}
    assert cands[1]["min_samples_leaf"] == 2           # last key varies fastest
    assert cands[-1]["n_estimators"] == 200


def test_grid_validation():
    with pytest.raises(ParamError):
        HyperGrid("random_forest", {"n_estimators": [10, -1]})
    with pytest.raises(ParamError):
        HyperGrid("random_forest", {"n_estimators": []})


def test_single_candidate_is_plain_cv():
    ds = _data()
    folds = make_folds(ds, 4, seed=1)
    res = grid_search(HyperGrid("logreg", {"c": [1.0]}), ds, folds, seed=5)
    assert res.best_index == 0
    manual = []
    for f in range(4):
        rs_seed, lr_seed = unit_seeds(5, 0, f)
        tr = ds.subset(folds.train_rows(f))
        va = ds.subset(folds.validation_rows(f))
        rs = resample(tr, ResampleSpec(), seed=rs_seed)
        m = fit(LearnerSpec("logreg", {"c": 1.0}, seed=lr_seed), rs.dataset)
        manual.append(metric_value("weighted_f1", va.labels, score(m, va.values), 3))
    assert res.best.fold_scores == manual
    assert res.best.mean_score == np.mean(manual)


def test_dominated_candidate_loses_on_every_fold():
    # XOR labels: depth-one stumps cannot see the signal, deep trees can
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, (160, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    ds = make_ds(X, y)
    folds = make_folds(ds, 4, seed=0)
    grid = HyperGrid("random_forest", {"n_estimators": [20], "max_depth": [1, None]})
    res = grid_search(grid, ds, folds, ResampleSpec("none"), metric="weighted_auc", seed=1)
    stump, deep = res.candidates
    assert all(d > s for s, d in zip(stump.fold_scores, deep.fold_scores))
    assert res.best_index == 1
    for c in res.candidates:
        again = evaluate_candidate(grid.family, c.params, ds, folds, ResampleSpec("none"),
                                   "weighted_auc", seed=1, index=c.index)
        assert again.fold_scores == c.fold_scores


def test_ties_keep_first_candidate():
    ds = _data()
    folds = make_folds(ds, 3, seed=0)
    # solver does not change the optimization, so both score identically
    res = grid_search(HyperGrid("logreg", {"solver": ["saga", "lbfgs"]}), ds, folds,
                      ResampleSpec("none"))
    assert res.candidates[0].fold_scores == res.candidates[1].fold_scores
    assert res.best_index == 0


def test_reevaluation_reproduces_scores_and_threads_agree():
    ds = _data()
    folds = make_folds(ds, 3, seed=2)
    grid = HyperGrid("random_forest", {"n_estimators": [5, 10], "max_depth": [None, 3]})
    spec = ResampleSpec("smote", k_neighbors=3)
    a = grid_search(grid, ds, folds, spec, seed=9, threads=1)
    b = grid_search(grid, ds, folds, spec, seed=9, threads=3)
    assert [c.fold_scores for c in a.candidates] == [c.fold_scores for c in b.candidates]
    again = evaluate_candidate(grid.family, a.best_params, ds, folds, spec, seed=9,
                               index=a.best_index)
    assert again.fold_scores == a.best.fold_scores


def test_failed_fit_disqualifies_candidate(monkeypatch):
    import skewlearn.search as mod
    from skewlearn.learners import FitError
    real = mod.fit

    def flaky(spec, data, *a, **k):
        if spec.params["c"] == 0.5:
            raise FitError("diverged")
        return real(spec, data, *a, **k)

    monkeypatch.setattr(mod, "fit", flaky)
    ds = _data()
    res = grid_search(HyperGrid("logreg", {"c": [0.5, 1.0]}), ds, make_folds(ds, 3, 0))
    assert res.candidates[0].mean_score == -math.inf and "diverged" in res.candidates[0].error
    assert res.best_index == 1


def test_fold_missing_class_is_an_error():
    ds = _data((20, 20, 3))
    folds = make_folds(ds, 3, 0)
    # force every row of class 2 into fold 0 so the first training side lacks it
    assign = folds.assignments.copy()
    assign[ds.labels == 2] = 0
    bad = type(folds)(3, assign, 0)
    with pytest.raises(DataError, match="absent"):
        grid_search(HyperGrid("logreg", {}), ds, bad)


def test_validation_folds_never_resampled():
    ds = _data()
    folds = make_folds(ds, 3, 0)
    for f in range(3):
        tr, va = folds.train_rows(f), folds.validation_rows(f)
        rs = resample(ds.subset(tr), ResampleSpec("smote", k_neighbors=3), seed=f)
        audit_split(tr, va, rs)
        # the validation multiset is the untouched original fold
        assert np.array_equal(ds.subset(va).values, ds.values[va])


def test_audit_detects_leakage():
    ds = _data()
    rows = np.arange(ds.n_rows)
    rs = resample(ds, ResampleSpec(), seed=0)
    with pytest.raises(LeakageError):
        audit_split(rows, rows[:5], rs)
