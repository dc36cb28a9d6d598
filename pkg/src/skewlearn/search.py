"""Exhaustive grid search with stratified k-fold cross-validation.

Training folds are rebalanced before fitting; validation folds are always the
untouched original rows.  Every (candidate, fold) unit draws its random
seeds from ``(seed, candidate index, fold index)``, so results do not depend
on how units are scheduled across threads.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .learners import Family, FitError, LearnerSpec, ParamError, fit, score
from .metrics import confusion, prf, roc_auc
from .resample import ORIGINAL, ResampleSpec, resample
from .tabular import DataError, FoldPlan, TabularDataset

log = logging.getLogger(__name__)

METRICS = ("weighted_f1", "weighted_auc")


class LeakageError(AssertionError):
    """A validation or test row was resampled or shared with training."""


@dataclass(frozen=True)
class HyperGrid:
    family: Family
    values: dict

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        values = {k: list(v) if isinstance(v, (list, tuple)) else [v] for k, v in self.values.items()}
        if any(len(v) == 0 for v in values.values()):
            raise ParamError("every grid key needs at least one value")
        object.__setattr__(self, "values", values)
        # validates keys and ranges up front
        for params in self.candidates():
            LearnerSpec(self.family, params)

    def candidates(self) -> list[dict]:
        keys = list(self.values)
        return [dict(zip(keys, combo)) for combo in itertools.product(*self.values.values())]

    def __len__(self) -> int:
        return math.prod(len(v) for v in self.values.values())


@dataclass
class CandidateResult:
    index: int
    params: dict
    fold_scores: list
    seconds: list
    seeds: list
    error: str | None = None

    @property
    def mean_score(self) -> float:
        if self.error is not None:
            return -math.inf
        return float(np.mean(self.fold_scores))

    def to_dict(self) -> dict:
        return {"index": self.index, "params": self.params,
                "fold_scores": [_num(s) for s in self.fold_scores],
                "mean_score": _num(self.mean_score), "seeds": self.seeds, "error": self.error}


def _num(x):
    return None if not math.isfinite(x) else float(x)


@dataclass
class SearchResult:
    family: Family
    metric: str
    candidates: list
    best_index: int
    total_seconds: float = 0.0
    audit: dict = field(default_factory=dict)

    @property
    def best(self) -> CandidateResult:
        return self.candidates[self.best_index]

    @property
    def best_params(self) -> dict:
        return self.best.params


def unit_seeds(seed: int, candidate: int, fold: int) -> tuple[int, int]:
    """(resample seed, learner seed) for one candidate x fold unit."""
    state = np.random.SeedSequence(seed, spawn_key=(candidate, fold)).generate_state(2)
    return int(state[0]), int(state[1])


def metric_value(metric: str, y_true, S, n_classes) -> float:
    if metric == "weighted_f1":
        M = confusion(y_true, np.argmax(S, axis=1), n_classes)
        return prf(M).average("weighted")["f1"]
    if metric == "weighted_auc":
        return roc_auc(y_true, S)[2]
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def audit_split(train_rows, eval_rows, resampled) -> None:
    """Check that evaluation rows are originals never seen by the resampler.

    ``resampled.provenance.source`` indexes the training subset; mapping it
    back through ``train_rows`` must never reach an evaluation row.
    """
    train_rows = np.asarray(train_rows)
    eval_rows = np.asarray(eval_rows)
    if np.intersect1d(train_rows, eval_rows).size:
        raise LeakageError("training and evaluation rows overlap")
    prov = resampled.provenance
    used = train_rows[prov.source]
    nb = prov.neighbor[prov.neighbor >= 0]
    used = np.concatenate([used, train_rows[nb]])
    if np.isin(used, eval_rows).any():
        raise LeakageError("resampled training rows derive from evaluation rows")
    if np.sum(prov.kind == ORIGINAL) != train_rows.size:
        raise LeakageError("resampled set does not retain every original training row once")


def evaluate_fold(family, params, train: TabularDataset, folds: FoldPlan, fold: int,
                  resample_spec: ResampleSpec, metric: str, resample_seed: int,
                  learner_seed: int) -> float:
    tr_rows = folds.train_rows(fold)
    va_rows = folds.validation_rows(fold)
    counts = np.bincount(train.labels[tr_rows], minlength=train.class_count)
    if np.any(counts == 0):
        raise DataError(f"fold {fold}: classes {np.flatnonzero(counts == 0).tolist()} "
                        "are absent from the training side")
    rs = resample(train.subset(tr_rows), resample_spec, seed=resample_seed)
    audit_split(tr_rows, va_rows, rs)
    val = train.subset(va_rows)
    model = fit(LearnerSpec(family, params, seed=learner_seed), rs.dataset)
    return metric_value(metric, val.labels, score(model, val.values), train.class_count)


def _run_unit(args):
    family, params, train, folds, f, rspec, metric, seeds = args
    t0 = time.perf_counter()
    try:
        s = evaluate_fold(family, params, train, folds, f, rspec, metric, *seeds)
        err = None
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        s, err = -math.inf, f"{type(exc).__name__}: {exc}"
    return s, time.perf_counter() - t0, err


def evaluate_candidate(family, params, train, folds, resample_spec, metric="weighted_f1",
                       seed=0, index=0, threads=1) -> CandidateResult:
    """Cross-validate one parameter assignment as candidate ``index`` of a search."""
    units = [(family, params, train, folds, f, resample_spec, metric, unit_seeds(seed, index, f))
             for f in range(folds.k)]
    out = _map(units, threads)
    errors = [e for _, _, e in out if e is not None]
    return CandidateResult(index, dict(params), [s for s, _, _ in out], [t for _, t, _ in out],
                           [list(u[-1]) for u in units], errors[0] if errors else None)


def _map(units, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_run_unit, units))
    return [_run_unit(u) for u in units]


def grid_search(grid: HyperGrid, train: TabularDataset, folds: FoldPlan,
                resample_spec: ResampleSpec | None = None, metric: str = "weighted_f1",
                seed: int = 0, threads: int = 1) -> SearchResult:
    """Score every grid candidate by mean validation metric across folds.

    A candidate whose fit fails on any fold scores ``-inf`` and the sweep
    continues.  The best candidate has the highest mean; ties keep the
    earlier one in enumeration order.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    if folds.assignments.shape[0] != train.n_rows:
        raise DataError("fold plan was not built on this training set")
    resample_spec = ResampleSpec() if resample_spec is None else resample_spec
    cands = grid.candidates()
    t0 = time.perf_counter()
    units = [(grid.family, p, train, folds, f, resample_spec, metric, unit_seeds(seed, i, f))
             for i, p in enumerate(cands) for f in range(folds.k)]
    out = _map(units, threads)
    results = []
    for i, p in enumerate(cands):
        chunk = out[i * folds.k:(i + 1) * folds.k]
        errors = [e for _, _, e in chunk if e is not None]
        if errors:
            log.warning("candidate %d %s failed: %s", i, p, errors[0])
        results.append(CandidateResult(
            i, dict(p), [s for s, _, _ in chunk], [t for _, t, _ in chunk],
            [list(unit_seeds(seed, i, f)) for f in range(folds.k)],
            errors[0] if errors else None))
    means = [r.mean_score for r in results]
    best = int(np.argmax(means))   # first maximum wins
    audit = {"passed": True, "units_checked": len(units)}
    return SearchResult(grid.family, metric, results, best, time.perf_counter() - t0, audit)
