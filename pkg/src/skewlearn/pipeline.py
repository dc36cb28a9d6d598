"""Config-driven end-to-end runs.

Stages run in a fixed order: ingest, holdout split, impute, encode/scale,
fold plan, then per learner family grid search, refit on the rebalanced
training split and evaluation on the untouched test split.

Artifacts under the output directory::

    manifest.json            resolved config, every derived seed, stage log, audit
    report_<family>.json     deterministic per-family report
    comparison.json          families ranked by weighted AUC, then weighted F1
    timings.json             wall-clock fit times (kept apart so reports stay byte-stable)
    plots/<family>/...       ROC / confusion / importance CSVs and SVGs
"""
from __future__ import annotations

import copy
import json
import logging
import math
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import impute as impute_mod
from . import preprocess
from .learners import Family, FitError, LearnerSpec, ParamError, feature_importance, score
from .metrics import evaluate, timed_fit
from .plots import emit_plots
from .resample import ResampleSpec, Strategy, resample
from .search import METRICS, HyperGrid, audit_split, grid_search
from .synth import SynthSpec, generate
from .tabular import (ColumnMeta, DataError, TabularDataset, holdout_indices, infer_schema,
                      load_csv, make_folds)

log = logging.getLogger(__name__)

THREADS_ENV = "SKEWLEARN_THREADS"
FAMILY_ORDER = [f.value for f in Family]


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


DEFAULTS = {
    "name": None,
    "data": None,
    "holdout": {"test_fraction": 0.2, "seed": None},
    "impute": {"max_iters": 10, "tol": 1e-3, "ridge_lambda": 1e-3, "rounding": "ceil"},
    "resample": {"strategy": "random_over", "k_neighbors": 5},
    "learners": None,
    "cv_folds": 5,
    "metric": "weighted_f1",
    "seed": 0,
    "threads": None,
    "output_dir": "skewlearn-out",
    "plots": {"svg": True},
    "timing_in_report": False,
}
CSV_KEYS = {"path", "label_column", "schema", "missing_tokens", "label_order"}
SYNTH_KEYS = set(SynthSpec.__dataclass_fields__)


def _check_keys(section: str, given: dict, allowed) -> None:
    if not isinstance(given, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


@dataclass
class PipelineConfig:
    """Validated pipeline settings; build with :meth:`from_dict`."""

    raw: dict
    name: str
    data: dict
    test_fraction: float
    holdout_seed: int | None
    impute: dict
    resample: ResampleSpec
    grids: dict            # family value -> HyperGrid
    cv_folds: int
    metric: str
    seed: int
    threads: int
    output_dir: Path
    svg: bool
    timing_in_report: bool

    @classmethod
    def from_dict(cls, cfg: dict, *, out=None, seed=None, threads=None, strategy=None) -> "PipelineConfig":
        _check_keys("config", cfg, DEFAULTS)
        merged = copy.deepcopy(DEFAULTS)
        for k, v in cfg.items():
            if isinstance(merged.get(k), dict) and k not in ("data", "learners"):
                _check_keys(k, v, DEFAULTS[k])
                merged[k].update(v)
            else:
                merged[k] = copy.deepcopy(v)
        if out is not None:
            merged["output_dir"] = str(out)
        if seed is not None:
            merged["seed"] = int(seed)
        if strategy is not None:
            merged["resample"]["strategy"] = strategy
        if threads is None and merged.get("threads") in (None, 0) and os.environ.get(THREADS_ENV):
            threads = int(os.environ[THREADS_ENV])
        if threads is not None:
            merged["threads"] = int(threads)

        data = merged["data"]
        if not isinstance(data, dict) or len(data) != 1 or next(iter(data)) not in ("csv", "synth"):
            raise ConfigError("data must be {'csv': {...}} or {'synth': {...}}")
        if "csv" in data:
            _check_keys("data.csv", data["csv"], CSV_KEYS)
            if "path" not in data["csv"] or "label_column" not in data["csv"]:
                raise ConfigError("data.csv needs 'path' and 'label_column'")
        else:
            _check_keys("data.synth", data["synth"], SYNTH_KEYS)
            try:
                SynthSpec(**data["synth"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"data.synth: {exc}") from None

        learners = merged["learners"]
        if not isinstance(learners, dict) or not learners:
            raise ConfigError("learners must map at least one family to a parameter grid")
        grids = {}
        for fam, grid in learners.items():
            try:
                grids[Family(fam).value] = HyperGrid(fam, grid or {})
            except ValueError as exc:
                raise ConfigError(f"learners.{fam}: {exc}") from None

        h = merged["holdout"]
        if not 0 < float(h["test_fraction"]) < 1:
            raise ConfigError("holdout.test_fraction must be in (0, 1)")
        if merged["metric"] not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        if int(merged["cv_folds"]) < 2:
            raise ConfigError("cv_folds must be >= 2")
        imp = merged["impute"]
        if imp["rounding"] not in ("ceil", "nearest"):
            raise ConfigError("impute.rounding must be 'ceil' or 'nearest'")
        try:
            rspec = ResampleSpec(Strategy(merged["resample"]["strategy"]),
                                 int(merged["resample"]["k_neighbors"]))
        except ValueError as exc:
            raise ConfigError(f"resample: {exc}") from None
        _check_keys("plots", merged["plots"], {"svg"})
        name = merged["name"] or (Path(data["csv"]["path"]).stem if "csv" in data
                                  else data["synth"].get("name", "synthetic"))
        merged["name"] = name
        return cls(merged, name, data, float(h["test_fraction"]), h["seed"], imp, rspec, grids,
                   int(merged["cv_folds"]), merged["metric"], int(merged["seed"]),
                   max(1, int(merged["threads"] or 1)), Path(merged["output_dir"]),
                   bool(merged["plots"]["svg"]), bool(merged["timing_in_report"]))

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(cfg, **overrides)

    def resolved(self) -> dict:
        out = copy.deepcopy(self.raw)
        out["output_dir"] = str(self.output_dir)
        return out


def derive_seeds(master: int, families) -> dict:
    """Named seeds for every random stage, all derived from ``master``."""
    names = ["holdout", "folds"] + [f"{f}.{part}" for f in families
                                    for part in ("search", "refit_resample", "refit_learner")]
    # keyed by name so adding a family leaves the other seeds unchanged
    return {n: int(np.random.SeedSequence([master, zlib.crc32(n.encode())]).generate_state(1)[0])
            for n in names}


def load_data(data: dict) -> TabularDataset:
    if "synth" in data:
        return generate(SynthSpec(**data["synth"]))
    c = data["csv"]
    tokens = c.get("missing_tokens", ["", "NA"])
    schema = c.get("schema")
    if schema is None:
        schema = infer_schema(c["path"], c["label_column"], tokens)
    else:
        schema = [ColumnMeta(s["name"], s.get("kind", "numeric")) for s in schema]
    return load_csv(c["path"], schema, c["label_column"], tokens, c.get("label_order"))


def _f(x):
    return None if x is None or not math.isfinite(x) else float(x)


def report_dict(name, family, search, rs_counts, train, test, ev, importances, seeds,
                feature_names, train_time=None, include_time=False) -> dict:
    pc = ev.per_class
    macro = pc.average("macro")
    valid = ~np.isnan(ev.auc)
    macro["auc"] = _f(float(np.mean(ev.auc[valid]))) if valid.any() else None
    weighted = pc.average("weighted")
    weighted["auc"] = _f(ev.weighted_auc)
    rep = {
        "dataset": {
            "name": name,
            "n_train": int(train.n_rows),
            "n_test": int(test.n_rows),
            "class_counts_train": train.class_counts().tolist(),
            "class_counts_train_resampled": [int(c) for c in rs_counts],
            "class_counts_test": test.class_counts().tolist(),
        },
        "family": family,
        "best_params": search.best_params,
        "cv": {
            "folds": int(search_folds(search)),
            "metric": search.metric,
            "best_index": search.best_index,
            "candidates": [c.to_dict() for c in search.candidates],
        },
        "test": {
            "confusion": ev.confusion.tolist(),
            "per_class": [{"precision": float(pc.precision[c]), "recall": float(pc.recall[c]),
                           "f1": float(pc.f1[c]), "support": int(pc.support[c]),
                           "auc": _f(ev.auc[c])} for c in range(len(pc.support))],
            "macro": macro,
            "weighted": weighted,
            "accuracy": ev.accuracy,
            "flags": ev.flags,
            "roc": [{"class": cv.class_id, "auc": _f(cv.auc), "fpr": cv.fpr.tolist(),
                     "tpr": cv.tpr.tolist(),
                     "thresholds": [_f(t) for t in cv.thresholds]} for cv in ev.curves],
        },
        "feature_importances": (None if importances is None else
                                {n: float(v) for n, v in zip(feature_names, importances)}),
        "class_names": list(train.label_names),
        "refit": "best parameters refit on the full rebalanced training split",
        "seeds": seeds,
    }
    if include_time:
        rep["train_time_seconds"] = train_time
    return rep


def search_folds(search) -> int:
    return len(search.candidates[0].fold_scores) if search.candidates else 0


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


@dataclass
class PipelineResult:
    reports: dict = field(default_factory=dict)        # family -> report dict
    evaluations: dict = field(default_factory=dict)    # family -> EvaluationReport
    comparison: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    out_dir: Path | None = None


def comparison_table(reports: dict) -> list:
    rows = []
    for fam, rep in reports.items():
        w = rep["test"]["weighted"]
        rows.append({"family": fam, "weighted_auc": w["auc"], "weighted_f1": w["f1"],
                     "weighted_precision": w["precision"], "weighted_recall": w["recall"]})
    rows.sort(key=lambda r: (-(r["weighted_auc"] if r["weighted_auc"] is not None else -1.0),
                             -r["weighted_f1"], FAMILY_ORDER.index(r["family"])))
    for i, r in enumerate(rows, 1):
        r["rank"] = i
    return rows


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run every stage; writes all artifacts under ``config.output_dir``.

    On failure the manifest is still written, marked ``incomplete`` with the
    failing stage, and a :class:`StageError` is raised.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    families = list(config.grids)
    seeds = derive_seeds(config.seed, families)
    if config.holdout_seed is not None:
        seeds["holdout"] = int(config.holdout_seed)
    manifest = {"status": "running", "config": config.resolved(), "seeds": seeds,
                "stages": [], "audit": [], "artifacts": []}
    result = PipelineResult(manifest=manifest, out_dir=out)
    stage = "ingest"

    def done(name, **info):
        manifest["stages"].append({"stage": name, **info})

    try:
        ds = load_data(config.data)
        done("ingest", n_rows=ds.n_rows, n_cols=ds.n_cols, class_counts=ds.class_counts().tolist())

        stage = "holdout"
        tr_idx, te_idx = holdout_indices(ds.labels, ds.class_count, config.test_fraction,
                                         seeds["holdout"])
        train, test = ds.subset(tr_idx), ds.subset(te_idx)
        done("holdout", n_train=train.n_rows, n_test=test.n_rows)

        stage = "impute"
        imp = impute_mod.fit_imputer(train, max_iters=int(config.impute["max_iters"]),
                                     tol=float(config.impute["tol"]),
                                     ridge_lambda=float(config.impute["ridge_lambda"]),
                                     rounding=config.impute["rounding"])
        train, test = imp.transform(train), imp.transform(test)
        done("impute", iterations=imp.iteration_count, converged=imp.converged,
             imputed_columns=[ds.columns[imp.columns[j]].name for j in imp.visit_order])

        stage = "preprocess"
        enc = preprocess.fit_encoder(train, unknown="reserve_code")
        scaler = preprocess.fit_scaler(train, enc)
        train = preprocess.apply(enc, scaler, train)
        test = preprocess.apply(enc, scaler, test)
        done("preprocess", constant_columns=[ds.columns[j].name
                                             for j in np.flatnonzero(scaler.constant)])

        stage = "folds"
        folds = make_folds(train, config.cv_folds, seeds["folds"])
        done("folds", k=folds.k)

        for fam in families:
            stage = f"search:{fam}"
            grid = config.grids[fam]
            search = grid_search(grid, train, folds, config.resample, config.metric,
                                 seeds[f"{fam}.search"], config.threads)
            if not math.isfinite(search.best.mean_score):
                raise FitError(f"every candidate failed; first error: {search.best.error}")
            manifest["audit"].append({"stage": stage, **search.audit})

            stage = f"refit:{fam}"
            rs = resample(train, config.resample, seed=seeds[f"{fam}.refit_resample"])
            audit_split(tr_idx, te_idx, rs)
            manifest["audit"].append({"stage": stage, "passed": True,
                                      "provenance": rs.provenance.counts()})
            spec = LearnerSpec(fam, search.best_params, seed=seeds[f"{fam}.refit_learner"])
            model, seconds = timed_fit(spec, rs.dataset)

            stage = f"evaluate:{fam}"
            S = score(model, test.values)
            try:
                fi = feature_importance(model)
            except ValueError:
                fi = None
            ev = evaluate(test.labels, S, test.class_count, seconds, fi)
            fam_seeds = {"master": config.seed, "holdout": seeds["holdout"], "folds": seeds["folds"],
                         "search": seeds[f"{fam}.search"],
                         "refit_resample": seeds[f"{fam}.refit_resample"],
                         "refit_learner": seeds[f"{fam}.refit_learner"]}
            rep = report_dict(config.name, fam, search, rs.dataset.class_counts(), train, test, ev,
                              fi, fam_seeds, ds.column_names, seconds, config.timing_in_report)
            result.reports[fam] = rep
            result.evaluations[fam] = ev
            result.timings[fam] = {"train_time_seconds": seconds,
                                   "search_seconds": search.total_seconds,
                                   "search_unit_seconds_sum": float(sum(sum(c.seconds) for c in search.candidates))}
            path = out / f"report_{fam}.json"
            path.write_text(dumps(rep), encoding="utf-8")
            manifest["artifacts"].append(path.name)

            stage = f"plots:{fam}"
            for p in emit_plots(rep, out / "plots" / fam, svg=config.svg):
                manifest["artifacts"].append(str(p.relative_to(out)))
            done(f"family:{fam}", best_index=search.best_index)

        stage = "compare"
        result.comparison = comparison_table(result.reports)
        (out / "comparison.json").write_text(dumps(result.comparison), encoding="utf-8")
        (out / "timings.json").write_text(dumps(result.timings), encoding="utf-8")
        manifest["artifacts"] += ["comparison.json", "timings.json"]
        manifest["status"] = "complete"
    except Exception as exc:
        manifest["status"] = "incomplete"
        manifest["failed_stage"] = stage
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        raise StageError(stage, exc) from exc
    finally:
        (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return result
