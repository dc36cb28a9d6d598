"""Acceptance gate: one test per criterion, each timed against its budget.

A summary line per criterion is printed at the end of the pytest session.
"""
import json
import time

import numpy as np
import pytest

from skewlearn import impute, preprocess
from skewlearn.learners import Family, LearnerSpec, fit, score
from skewlearn.learners import logreg as lr_mod
from skewlearn.learners import mlp as mlp_mod
from skewlearn.learners._common import one_hot
from skewlearn.learners.boosting import fit_boosting
from skewlearn.metrics import evaluate, roc_curve
from skewlearn.pipeline import PipelineConfig, load_data, run_pipeline
from skewlearn.resample import ORIGINAL, SYNTHETIC, ResampleSpec, random_oversample, resample, smote
from skewlearn.search import audit_split, evaluate_candidate
from skewlearn.synth import (BREAST_COUNTS, HEAD_NECK_COUNTS, PROSTATE_COUNTS, SynthSpec,
                             complete_and_masked, generate)
from skewlearn.tabular import holdout_indices, make_folds, stratified_holdout

from conftest import blobs, central_diff, make_ds, mann_whitney_auc, rel_err

pytestmark = pytest.mark.acceptance


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _prep(spec, seed, test_fraction=0.2):
    tr, te = stratified_holdout(generate(spec), test_fraction, seed)
    sc = preprocess.fit_scaler(tr)
    return preprocess.apply(None, sc, tr), preprocess.apply(None, sc, te)


def test_01_oversampling_count_law(acceptance):
    cases = [(HEAD_NECK_COUNTS, 4695), (BREAST_COUNTS, 4290), (PROSTATE_COUNTS, 7385)]
    data = [make_ds(*blobs(c, d=25, seed=i)) for i, (c, _) in enumerate(cases)]
    ok = True
    with Clock() as clk:
        for ds, (counts, total) in zip(data, cases):
            out = random_oversample(ds, ResampleSpec(seed=0)).dataset
            ok &= out.n_rows == total
            ok &= out.class_counts().tolist() == [max(counts)] * len(counts)
    ok &= clk.seconds < 1.0
    acceptance(1, "oversampling count law", ok,
               f"4695/4290/7385 rows (printed prostate total 7355 is inconsistent), "
               f"{clk.seconds:.3f}s < 1s")
    assert ok


def test_02_smote_geometry(acceptance):
    rng = np.random.default_rng(2024)
    worst, checked = 0.0, 0
    knn_ok = True
    with Clock() as clk:
        for t in range(50):
            C = int(rng.integers(2, 5))
            d = int(rng.integers(1, 11))
            k = int(rng.integers(1, 6))
            counts = rng.integers(k + 1, 500 // C + 1, size=C)
            counts[rng.integers(C)] = max(counts.max(), 500 // C)   # make it skewed
            X, y = blobs(tuple(int(c) for c in counts), d=d, seed=t)
            ds = make_ds(X, y)
            rs = smote(ds, ResampleSpec("smote", k_neighbors=k, seed=t))
            p, out = rs.provenance, rs.dataset.values
            for r in np.flatnonzero(p.kind == SYNTHETIC):
                i, j = p.source[r], p.neighbor[r]
                members = np.flatnonzero(y == y[i])
                dist = np.sqrt(((X[members] - X[i]) ** 2).sum(axis=1))
                dist[members == i] = np.inf
                radius = np.sort(dist)[k - 1]
                knn_ok &= bool(y[j] == y[i] and dist[members == j][0] <= radius + 1e-12)
                seg = X[j] - X[i]
                den = seg @ seg
                s = 0.0 if den == 0 else np.clip((out[r] - X[i]) @ seg / den, 0, 1)
                worst = max(worst, float(np.linalg.norm(X[i] + s * seg - out[r])))
                checked += 1
    ok = knn_ok and worst <= 1e-9 and clk.seconds < 30
    acceptance(2, "SMOTE geometry", ok,
               f"{checked} synthetic rows over 50 datasets, max deviation {worst:.1e}, "
               f"kNN membership {'ok' if knn_ok else 'VIOLATED'}, {clk.seconds:.1f}s < 30s")
    assert ok


def test_03_auc_oracle(acceptance):
    rng = np.random.default_rng(3)
    worst, inv_worst, n_sets = 0.0, 0.0, 0
    with Clock() as clk:
        while n_sets < 200:
            n = int(rng.integers(2, 201))
            C = int(rng.integers(2, 5))
            y = rng.integers(0, C, n)
            S = np.round(rng.normal(size=(n, C)), int(rng.integers(0, 4)))   # forces ties
            for c in range(C):
                pos = y == c
                if pos.all() or not pos.any():
                    continue
                auc = roc_curve(pos, S[:, c]).auc
                worst = max(worst, abs(auc - mann_whitney_auc(S[pos, c], S[~pos, c])))
                for f in (lambda x: 2 * x + 1, np.tanh):
                    inv_worst = max(inv_worst, abs(roc_curve(pos, f(S[:, c])).auc - auc))
            n_sets += 1
    ok = worst <= 1e-9 and inv_worst <= 1e-9 and clk.seconds < 10
    acceptance(3, "AUC oracle", ok,
               f"200 sets, |AUC - Mann-Whitney| <= {worst:.1e}, monotone-transform drift "
               f"{inv_worst:.1e}, {clk.seconds:.1f}s < 10s")
    assert ok


def test_04_gradient_checks(acceptance):
    rng = np.random.default_rng(4)
    lr_worst = mlp_worst = 0.0
    with Clock() as clk:
        for _ in range(20):
            n, d, C = int(rng.integers(5, 30)), int(rng.integers(1, 6)), int(rng.integers(2, 5))
            X, Y = rng.normal(size=(n, d)), one_hot(rng.integers(0, C, n), C)
            W, b = rng.normal(size=(C, d)), rng.normal(size=C)
            creg = float(rng.uniform(0.1, 10))
            _, gW, gb = lr_mod.loss_and_grad(W, b, X, Y, creg)
            f = lambda: lr_mod.loss_and_grad(W, b, X, Y, creg)[0]
            lr_worst = max(lr_worst, rel_err(np.r_[gW.ravel(), gb],
                                             np.r_[central_diff(f, W).ravel(), central_diff(f, b)]))
        for _ in range(20):
            n, d, C = int(rng.integers(5, 30)), int(rng.integers(1, 6)), int(rng.integers(2, 5))
            X, Y = rng.normal(size=(n, d)), one_hot(rng.integers(0, C, n), C)
            params = mlp_mod.init_params(d, int(rng.integers(3, 12)), C, rng)
            alpha = float(rng.uniform(1e-4, 1))
            _, grads = mlp_mod.loss_and_grad(params, X, Y, alpha)
            f = lambda: mlp_mod.loss_and_grad(params, X, Y, alpha)[0]
            num = np.concatenate([central_diff(f, p).ravel() for p in params])
            mlp_worst = max(mlp_worst, rel_err(np.concatenate([g.ravel() for g in grads]), num))
    ok = lr_worst < 1e-5 and mlp_worst < 1e-5 and clk.seconds < 30
    acceptance(4, "gradient checks", ok,
               f"max relative error logreg {lr_worst:.1e}, MLP {mlp_worst:.1e} (< 1e-5), "
               f"{clk.seconds:.1f}s < 30s")
    assert ok


def test_05_boosting_monotonicity(acceptance):
    worst = -np.inf
    with Clock() as clk:
        for s in range(10):
            X, y = blobs((60, 35, 15), d=5, sep=1.0, seed=s)
            b = fit_boosting(X, y, 3, mode="gbt", n_estimators=50, subsample=1.0,
                             max_features=None, seed=s)
            worst = max(worst, float(np.max(np.diff(b.train_loss))))
    ok = worst <= 0 and clk.seconds < 60
    acceptance(5, "boosting monotonicity", ok,
               f"largest per-round loss change {worst:.2e} over 10 datasets x 50 rounds, "
               f"{clk.seconds:.1f}s < 60s")
    assert ok


RF_GRID = {"n_estimators": [10, 50, 100, 200], "max_features": ["sqrt", "log2"],
           "max_depth": [None, 10, 20, 30, 40, 50], "min_samples_split": [2, 5, 10],
           "min_samples_leaf": [1, 2, 4]}


def _replay_train(manifest):
    """Rebuild the pipeline's training split from the manifest alone."""
    cfg = manifest["config"]
    seeds = manifest["seeds"]
    ds = load_data(cfg["data"])
    tr_idx, _ = holdout_indices(ds.labels, ds.class_count, cfg["holdout"]["test_fraction"],
                                seeds["holdout"])
    train = ds.subset(tr_idx)
    train = impute.fit_imputer(train, **{k: cfg["impute"][k] for k in
                                         ("max_iters", "tol", "ridge_lambda", "rounding")}
                               ).transform(train)
    enc = preprocess.fit_encoder(train, unknown="reserve_code")
    train = preprocess.apply(enc, preprocess.fit_scaler(train, enc), train)
    return train, make_folds(train, cfg["cv_folds"], seeds["folds"])


@pytest.mark.slow
def test_06_grid_fidelity(acceptance, tmp_path):
    cfg = {"data": {"synth": {"class_counts": [179, 70, 14], "dims": 8, "seed": 6}},
           "learners": {"random_forest": RF_GRID}, "cv_folds": 5, "seed": 6,
           "output_dir": str(tmp_path)}
    with Clock() as clk:
        result = run_pipeline(PipelineConfig.from_dict(cfg))
    rep = result.reports["random_forest"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    n_cand = len(rep["cv"]["candidates"])
    best = rep["cv"]["candidates"][rep["cv"]["best_index"]]
    train, folds = _replay_train(manifest)
    again = evaluate_candidate(Family.RANDOM_FOREST, best["params"], train, folds,
                               ResampleSpec(manifest["config"]["resample"]["strategy"],
                                            manifest["config"]["resample"]["k_neighbors"]),
                               manifest["config"]["metric"],
                               seed=manifest["seeds"]["random_forest.search"],
                               index=best["index"])
    same = again.fold_scores == best["fold_scores"]
    ok = n_cand == 432 and same and clk.seconds < 600
    acceptance(6, "grid fidelity", ok,
               f"{n_cand} candidates, best #{best['index']} fold scores "
               f"{'reproduced exactly' if same else 'DIFFER'} from manifest seeds, "
               f"n={train.n_rows + rep['dataset']['n_test']}, {clk.seconds:.0f}s < 600s")
    assert ok


def test_07_leakage_guard(acceptance, tmp_path):
    audits = []
    ok = True
    for strategy in ("random_over", "smote"):
        cfg = {"data": {"synth": {"class_counts": [120, 50, 12], "dims": 6, "missing_rate": 0.05,
                                  "seed": 7}},
               "learners": {"random_forest": {"n_estimators": [10]}, "logreg": {}},
               "resample": {"strategy": strategy}, "cv_folds": 3, "seed": 7,
               "output_dir": str(tmp_path / strategy)}
        run_pipeline(PipelineConfig.from_dict(cfg))
        manifest = json.loads((tmp_path / strategy / "manifest.json").read_text())
        audits += manifest["audit"]
        # independent replay of every fold: validation rows stay original and unseen
        train, folds = _replay_train(manifest)
        for f in range(folds.k):
            tr, va = folds.train_rows(f), folds.validation_rows(f)
            rs = resample(train.subset(tr), ResampleSpec(strategy, 3), seed=f)
            audit_split(tr, va, rs)
            used = set(tr[rs.provenance.source].tolist())
            used |= set(tr[rs.provenance.neighbor[rs.provenance.neighbor >= 0]].tolist())
            ok &= not used & set(va.tolist())
            ok &= int(np.sum(rs.provenance.kind == ORIGINAL)) == tr.size
    ok &= bool(audits) and all(a["passed"] for a in audits)
    acceptance(7, "leakage guard", ok,
               f"{len(audits)} pipeline audits passed, fold replays clean for random_over and smote")
    assert ok


def test_08_oversampling_ablation(acceptance):
    gains = []
    with Clock() as clk:
        for s in range(5):
            tr, te = _prep(SynthSpec(BREAST_COUNTS, separation=2.0, seed=s), s)
            recall = {}
            for strategy in ("none", "random_over"):
                rs = resample(tr, ResampleSpec(strategy, seed=s))
                m = fit(LearnerSpec("random_forest", {}, seed=s), rs.dataset)
                recall[strategy] = evaluate(te.labels, score(m, te.values), 3).per_class.recall[2]
            gains.append(recall["random_over"] - recall["none"])
    mean = float(np.mean(gains))
    ok = mean > 0 and clk.seconds < 300
    acceptance(8, "oversampling ablation direction", ok,
               f"mean minority recall gain {mean:+.3f} (per seed {np.round(gains, 3).tolist()}), "
               f"{clk.seconds:.0f}s < 300s")
    assert ok


@pytest.mark.slow
def test_09_learnability(acceptance):
    tr, te = _prep(SynthSpec(HEAD_NECK_COUNTS, separation=2.0, seed=9), 9)
    rs = resample(tr, ResampleSpec("random_over", seed=9)).dataset
    aucs = {}
    with Clock() as clk:
        for fam in Family:
            m = fit(LearnerSpec(fam, {}, seed=9), rs)
            aucs[fam.value] = evaluate(te.labels, score(m, te.values), 5).weighted_auc
    ok = aucs["random_forest"] >= 0.75 and min(aucs.values()) >= 0.6 and clk.seconds < 600
    acceptance(9, "learnability sanity", ok,
               ", ".join(f"{k} {v:.3f}" for k, v in aucs.items()) + f"; {clk.seconds:.0f}s < 600s")
    assert ok


def test_10_imputation_value(acceptance):
    wins, detail = 0, []
    with Clock() as clk:
        for s in range(10):
            full, masked = complete_and_masked(SynthSpec((200, 120, 40), dims=10, missing_rate=0.1,
                                                         correlation=0.7, seed=s))
            hole = masked.missing_mask()
            it = impute.fit_imputer(masked).transform(masked).values
            mean = impute.mean_impute(masked)
            rmse_it = np.sqrt(np.mean((it[hole] - full.values[hole]) ** 2))
            rmse_mean = np.sqrt(np.mean((mean[hole] - full.values[hole]) ** 2))
            wins += rmse_it <= rmse_mean
            detail.append(rmse_it / rmse_mean)
    ok = wins == 10 and clk.seconds < 60
    acceptance(10, "imputation value", ok,
               f"{wins}/10 seeds beat mean fill (RMSE ratio {min(detail):.2f}..{max(detail):.2f}), "
               f"{clk.seconds:.1f}s < 60s")
    assert ok


def test_11_determinism(acceptance, tmp_path):
    def cfg(out):
        return {"data": {"synth": {"class_counts": [143, 56, 14], "dims": 8, "missing_rate": 0.05,
                                   "seed": 11}},
                "learners": {f.value: ({"n_estimators": [5]} if f.value in
                                       ("random_forest", "gbt", "gbt_xgb_mode") else
                                       {"n_estimators": [2]} if f.value == "mlp_bagging" else {})
                             for f in Family},
                "resample": {"strategy": "smote"}, "cv_folds": 3, "seed": 11,
                "output_dir": str(out)}
    run_pipeline(PipelineConfig.from_dict(cfg(tmp_path / "a")))
    run_pipeline(PipelineConfig.from_dict(cfg(tmp_path / "b")))
    names = sorted(p.name for p in (tmp_path / "a").glob("*.json")
                   if p.name not in ("manifest.json", "timings.json"))
    same = [(tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names]
    ok = len(names) == 7 and all(same)
    acceptance(11, "determinism", ok,
               f"{sum(same)}/{len(names)} JSON reports byte-identical across two runs")
    assert ok
