"""Command-line entry point: ``skewlearn <subcommand> ...``.

Every stage reads and writes plain CSV (plus a ``.schema.json`` sidecar with
column kinds and label names), so stages can be chained or run alone.

Exit codes: 0 success, 2 config error, 3 data error, 4 training failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import pickle
import sys
from pathlib import Path

import numpy as np

from . import impute, preprocess
from .learners import FitError, LearnerSpec, ParamError, feature_importance, score
from .metrics import evaluate as evaluate_scores
from .metrics import timed_fit
from .pipeline import THREADS_ENV, ConfigError, PipelineConfig, StageError, dumps, run_pipeline
from .plots import emit_plots
from .resample import ResampleSpec, resample
from .synth import SynthSpec, generate
from .tabular import (ColumnMeta, DataError, infer_schema, load_csv, stratified_holdout,
                      write_csv)

log = logging.getLogger("skewlearn")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAIN = 0, 2, 3, 4


def _sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".schema.json")


def write_dataset(ds, path, label="label") -> Path:
    path = write_csv(ds, path, label)
    meta = {"label_column": label, "label_names": list(ds.label_names),
            "columns": [{"name": c.name, "kind": c.kind.value} for c in ds.columns]}
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


def read_dataset(path, label="label", schema=None, missing=("", "NA")):
    """Load a CSV using an explicit schema file, the sidecar, or inferred kinds."""
    label_order = None
    source = Path(schema) if schema else _sidecar(path)
    if source.exists():
        meta = json.loads(source.read_text(encoding="utf-8"))
        cols = meta["columns"] if isinstance(meta, dict) else meta
        columns = [ColumnMeta(c["name"], c.get("kind", "numeric")) for c in cols]
        if isinstance(meta, dict):
            label = meta.get("label_column", label)
            label_order = meta.get("label_names")
    elif schema:
        raise DataError(f"schema file {schema} not found")
    else:
        columns = infer_schema(path, label, missing)
    return load_csv(path, columns, label, missing, label_order)


def _counts(text):
    return tuple(int(c) for c in text.replace(":", ",").split(",") if c.strip())


def cmd_synth(args):
    if args.config:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        spec = SynthSpec(**cfg)
    else:
        spec = SynthSpec(class_counts=_counts(args.counts), dims=args.dims,
                         separation=args.separation, ordinal_fraction=args.ordinal_fraction,
                         missing_rate=args.missing_rate, correlation=args.correlation,
                         seed=args.seed if args.seed is not None else 0)
    ds = generate(spec)
    print(write_dataset(ds, args.out, args.label))


def cmd_split(args):
    ds = read_dataset(args.data, args.label, args.schema)
    train, test = stratified_holdout(ds, args.test_fraction, args.seed or 0)
    out = Path(args.out)
    print(write_dataset(train, out / "train.csv", args.label))
    print(write_dataset(test, out / "test.csv", args.label))


def cmd_impute(args):
    train = read_dataset(args.train, args.label, args.schema)
    model = impute.fit_imputer(train, max_iters=args.max_iters, tol=args.tol,
                               ridge_lambda=args.ridge_lambda, rounding=args.rounding)
    out = Path(args.out)
    print(write_dataset(model.transform(train), out / Path(args.train).name, args.label))
    for t in args.apply or []:
        ds = read_dataset(t, args.label, args.schema)
        print(write_dataset(model.transform(ds), out / Path(t).name, args.label))


def cmd_preprocess(args):
    train = read_dataset(args.train, args.label, args.schema)
    enc = preprocess.fit_encoder(train, unknown=args.unknown)
    scaler = preprocess.fit_scaler(train, enc)
    out = Path(args.out)
    print(write_dataset(preprocess.apply(enc, scaler, train), out / Path(args.train).name, args.label))
    for t in args.apply or []:
        ds = read_dataset(t, args.label, args.schema)
        print(write_dataset(preprocess.apply(enc, scaler, ds), out / Path(t).name, args.label))


def cmd_resample(args):
    train = read_dataset(args.train, args.label, args.schema)
    spec = ResampleSpec(args.strategy or "random_over", args.k_neighbors,
                        seed=args.seed if args.seed is not None else 0)
    rs = resample(train, spec)
    path = write_dataset(rs.dataset, args.out, args.label)
    prov = rs.provenance
    kinds = np.array(["original", "duplicate", "synthetic"])[prov.kind]
    with open(path.with_name(path.stem + ".provenance.csv"), "w", encoding="utf-8") as fh:
        fh.write("row,kind,source,neighbor,delta\n")
        for r in range(prov.kind.size):
            fh.write(f"{r},{kinds[r]},{prov.source[r]},{prov.neighbor[r]},{float(prov.delta[r])!r}\n")
    print(path)


def cmd_train(args):
    train = read_dataset(args.train, args.label, args.schema)
    params = json.loads(args.params) if args.params else {}
    spec = LearnerSpec(args.family, params, seed=args.seed if args.seed is not None else 0)
    model, seconds = timed_fit(spec, train)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("wb") as fh:
        pickle.dump({"model": model, "feature_names": train.column_names,
                     "label_names": list(train.label_names)}, fh)
    print(f"{out} ({seconds:.3f}s)")


def cmd_evaluate(args):
    with open(args.model, "rb") as fh:
        bundle = pickle.load(fh)
    model = bundle["model"]
    test = read_dataset(args.test, args.label, args.schema)
    S = score(model, test.values)
    try:
        fi = feature_importance(model)
    except ValueError:
        fi = None
    ev = evaluate_scores(test.labels, S, model.n_classes, None, fi)
    pc = ev.per_class
    rep = {
        "family": model.family.value,
        "params": model.params,
        "class_names": bundle["label_names"],
        "test": {
            "confusion": ev.confusion.tolist(),
            "per_class": [{"precision": float(pc.precision[c]), "recall": float(pc.recall[c]),
                           "f1": float(pc.f1[c]), "support": int(pc.support[c]),
                           "auc": None if np.isnan(ev.auc[c]) else float(ev.auc[c])}
                          for c in range(model.n_classes)],
            "macro": pc.average("macro"),
            "weighted": {**pc.average("weighted"),
                         "auc": None if np.isnan(ev.weighted_auc) else ev.weighted_auc},
            "accuracy": ev.accuracy,
            "flags": ev.flags,
            "roc": [{"class": c.class_id, "auc": None if np.isnan(c.auc) else c.auc,
                     "fpr": c.fpr.tolist(), "tpr": c.tpr.tolist(),
                     "thresholds": [None if not np.isfinite(t) else float(t) for t in c.thresholds]}
                    for c in ev.curves],
        },
        "feature_importances": (None if fi is None else
                                dict(zip(bundle["feature_names"], map(float, fi)))),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(rep), encoding="utf-8")
    print(out)


def cmd_pipeline(args):
    cfg = PipelineConfig.from_file(args.config, out=args.out, seed=args.seed,
                                   threads=args.threads, strategy=args.strategy)
    result = run_pipeline(cfg)
    for row in result.comparison:
        auc = row["weighted_auc"]
        print(f"{row['rank']:>2}  {row['family']:<14} weighted AUC "
              f"{'n/a' if auc is None else f'{auc:.3f}'}  weighted F1 {row['weighted_f1']:.3f}")
    print(result.out_dir)


def cmd_plots(args):
    rep = json.loads(Path(args.report).read_text(encoding="utf-8"))
    for p in emit_plots(rep, args.out, svg=not args.no_svg):
        print(p)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skewlearn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, label=True, schema=True):
        if label:
            sp.add_argument("--label", default="label", help="label column name")
        if schema:
            sp.add_argument("--schema", help="JSON column schema (default: sidecar or inferred)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help=f"worker threads (fallback ${THREADS_ENV})")

    s = sub.add_parser("synth", help="generate a synthetic imbalanced dataset")
    s.add_argument("--config", help="JSON file with SynthSpec fields")
    s.add_argument("--counts", default="1430,555,69")
    s.add_argument("--dims", type=int, default=24)
    s.add_argument("--separation", type=float, default=2.0)
    s.add_argument("--ordinal-fraction", type=float, default=0.5)
    s.add_argument("--missing-rate", type=float, default=0.0)
    s.add_argument("--correlation", type=float, default=0.0)
    s.add_argument("--out", required=True)
    common(s, schema=False)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("split", help="stratified train/test holdout")
    s.add_argument("data")
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("impute", help="fit the iterative imputer on --train and fill CSVs")
    s.add_argument("--train", required=True)
    s.add_argument("--apply", nargs="*", help="further CSVs to transform with the fitted model")
    s.add_argument("--max-iters", type=int, default=10)
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--ridge-lambda", type=float, default=1e-3)
    s.add_argument("--rounding", choices=["ceil", "nearest"], default="ceil")
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_impute)

    s = sub.add_parser("preprocess", help="label-encode and standardize")
    s.add_argument("--train", required=True)
    s.add_argument("--apply", nargs="*")
    s.add_argument("--unknown", choices=["error", "reserve_code"], default="reserve_code")
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("resample", help="rebalance a training CSV")
    s.add_argument("--train", required=True)
    s.add_argument("--strategy", choices=["none", "random_over", "smote"])
    s.add_argument("--k-neighbors", type=int, default=5)
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_resample)

    s = sub.add_parser("train", help="fit one learner and pickle it")
    s.add_argument("--train", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--params", help="JSON object of hyperparameters")
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a pickled model on a test CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True)
    common(s)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("pipeline", help="run the configured end-to-end experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--strategy", choices=["none", "random_over", "smote"])
    common(s, label=False, schema=False)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("plots", help="write plot files for a report JSON")
    s.add_argument("--report", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-svg", action="store_true")
    s.set_defaults(func=cmd_plots)
    return p


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (ConfigError, ParamError, json.JSONDecodeError)):
        return EXIT_CONFIG
    if isinstance(exc, FitError):
        return EXIT_TRAIN
    if isinstance(exc, (DataError, OSError, ValueError, KeyError)):
        return EXIT_DATA
    raise exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 -- mapped to exit codes below
        code = exit_code(exc)
        print(f"skewlearn: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
