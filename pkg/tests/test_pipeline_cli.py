import csv
import json
import xml.etree.ElementTree as ET
import pytest

from skewlearn.cli import main, read_dataset
from skewlearn.pipeline import ConfigError, PipelineConfig, StageError, derive_seeds, run_pipeline
from skewlearn.search import HyperGrid, grid_search
from skewlearn.synth import SynthSpec, generate
from skewlearn.tabular import make_folds


def _cfg(out, **over):
    cfg = {
        "name": "breast-synth",
        "data": {"synth": {"class_counts": [143, 56, 14], "dims": 6, "separation": 2.0,
                           "missing_rate": 0.05, "seed": 3}},
        "learners": {"random_forest": {"n_estimators": [10], "max_depth": [None, 5]},
                     "logreg": {"c": [1.0]}},
        "cv_folds": 3,
        "seed": 4,
        "output_dir": str(out),
    }
    cfg.update(over)
    return cfg


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return run_pipeline(PipelineConfig.from_dict(_cfg(out)))


def test_artifacts_and_report_schema(run):
    out = run.out_dir
    for name in ("report_random_forest.json", "report_logreg.json", "comparison.json",
                 "manifest.json", "timings.json"):
        assert (out / name).exists()
    rep = json.loads((out / "report_random_forest.json").read_text())
    assert set(rep) >= {"dataset", "family", "best_params", "cv", "test", "feature_importances",
                        "seeds"}
    assert set(rep["dataset"]) == {"name", "n_train", "n_test", "class_counts_train",
                                   "class_counts_train_resampled", "class_counts_test"}
    assert {"folds", "metric", "candidates"} <= set(rep["cv"])
    assert set(rep["test"]["per_class"][0]) == {"precision", "recall", "f1", "support", "auc"}
    assert set(rep["test"]["weighted"]) == {"precision", "recall", "f1", "auc"}
    assert rep["dataset"]["class_counts_train_resampled"] == [114] * 3
    assert rep["dataset"]["class_counts_test"] == [29, 11, 3]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert all(a["passed"] for a in manifest["audit"])


def test_comparison_matches_reports(run):
    for row in run.comparison:
        w = run.reports[row["family"]]["test"]["weighted"]
        assert row["weighted_auc"] == w["auc"] and row["weighted_f1"] == w["f1"]
    aucs = [r["weighted_auc"] for r in run.comparison]
    assert aucs == sorted(aucs, reverse=True)


def test_byte_identical_rerun(run, tmp_path):
    again = run_pipeline(PipelineConfig.from_dict(_cfg(tmp_path)))
    for fam in run.reports:
        a = (run.out_dir / f"report_{fam}.json").read_bytes()
        assert a == (again.out_dir / f"report_{fam}.json").read_bytes()


def test_manifest_seeds_reproduce(run):
    manifest = json.loads((run.out_dir / "manifest.json").read_text())
    assert manifest["seeds"] == derive_seeds(manifest["config"]["seed"], list(run.reports))


def test_plots(run):
    plots = run.out_dir / "plots" / "random_forest"
    rep = run.reports["random_forest"]
    for c in range(3):
        rows = list(csv.reader((plots / f"roc_class{c}.csv").open()))
        assert rows[0] == ["fpr", "tpr", "threshold"]
        assert rows[1][:2] == ["0.0", "0.0"] and rows[-1][:2] == ["1.0", "1.0"]
    conf = list(csv.reader((plots / "confusion.csv").open()))[1:]
    sums = [sum(int(v) for v in r[1:]) for r in conf]
    assert sums == [p["support"] for p in rep["test"]["per_class"]]
    for svg in ("roc.svg", "confusion.svg"):
        assert ET.parse(plots / svg).getroot().tag.endswith("svg")
    assert (plots / "feature_importance.csv").exists()
    # logreg reports mean |coefficient| importances too
    assert (run.out_dir / "plots" / "logreg" / "feature_importance.csv").exists()


def test_ablation_pair_reports_minority_recall(tmp_path):
    reports = {}
    for strategy in ("none", "random_over"):
        cfg = _cfg(tmp_path / strategy, learners={"random_forest": {"n_estimators": [10]}})
        res = run_pipeline(PipelineConfig.from_dict(cfg, strategy=strategy))
        reports[strategy] = res.reports["random_forest"]
    for rep in reports.values():
        assert "recall" in rep["test"]["per_class"][2]
    assert reports["none"]["dataset"]["class_counts_train_resampled"] == [114, 45, 11]


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        PipelineConfig.from_dict(_cfg(tmp_path, colour="red"))
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(_cfg(tmp_path, learners={"random_forest": {"n_trees": [1]}}))
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(_cfg(tmp_path, metric="accuracy"))
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(_cfg(tmp_path, data={"synth": {"class_counts": [5]}}))


def test_thread_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("SKEWLEARN_THREADS", "3")
    assert PipelineConfig.from_dict(_cfg(tmp_path)).threads == 3
    assert PipelineConfig.from_dict(_cfg(tmp_path), threads=2).threads == 2


def test_stage_failure_marks_manifest_incomplete(tmp_path):
    cfg = _cfg(tmp_path, data={"csv": {"path": str(tmp_path / "missing.csv"), "label_column": "y"}})
    with pytest.raises(StageError) as err:
        run_pipeline(PipelineConfig.from_dict(cfg))
    assert err.value.stage == "ingest"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "incomplete" and manifest["failed_stage"] == "ingest"


def test_search_time_close_to_sum_of_units():
    ds = generate(SynthSpec((80, 40, 10), dims=5, seed=0))
    res = grid_search(HyperGrid("random_forest", {"n_estimators": [20, 40]}), ds,
                      make_folds(ds, 3, 0))
    parts = sum(sum(c.seconds) for c in res.candidates)
    assert abs(res.total_seconds - parts) <= 0.1 * res.total_seconds


# -- CLI ----------------------------------------------------------------------

def test_cli_stage_chain(tmp_path, capsys):
    d = tmp_path
    assert main(["synth", "--counts", "60,25,8", "--dims", "5", "--missing-rate", "0.1",
                 "--seed", "2", "--out", str(d / "all.csv")]) == 0
    assert main(["split", str(d / "all.csv"), "--seed", "1", "--out", str(d / "s")]) == 0
    assert main(["impute", "--train", str(d / "s/train.csv"), "--apply", str(d / "s/test.csv"),
                 "--out", str(d / "i")]) == 0
    assert read_dataset(d / "i/test.csv").is_complete()
    assert main(["preprocess", "--train", str(d / "i/train.csv"), "--apply", str(d / "i/test.csv"),
                 "--out", str(d / "p")]) == 0
    assert main(["resample", "--train", str(d / "p/train.csv"), "--strategy", "smote",
                 "--out", str(d / "r/train.csv")]) == 0
    rs = read_dataset(d / "r/train.csv")
    assert len(set(rs.class_counts().tolist())) == 1
    assert (d / "r/train.provenance.csv").exists()
    assert main(["train", "--train", str(d / "r/train.csv"), "--family", "logreg",
                 "--out", str(d / "m.pkl")]) == 0
    assert main(["evaluate", "--model", str(d / "m.pkl"), "--test", str(d / "p/test.csv"),
                 "--out", str(d / "rep.json")]) == 0
    assert main(["plots", "--report", str(d / "rep.json"), "--out", str(d / "plots")]) == 0
    assert len(list((d / "plots").glob("roc_class*.csv"))) == 3


def test_cli_pipeline_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(_cfg(tmp_path / "ignored")))
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(cfg), "--out", str(out), "--seed", "9",
                 "--strategy", "smote", "--threads", "2"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 9
    assert manifest["config"]["resample"]["strategy"] == "smote"
    assert manifest["config"]["threads"] == 2


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"data": {"synth": {}}, "learners": {"forest": {}}}))
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["pipeline", "--config", str(tmp_path / "nope.json")]) == 2
    csvp = tmp_path / "d.csv"
    csvp.write_text("a,label\n1,0\n2\n")
    assert main(["train", "--train", str(csvp), "--family", "logreg", "--out",
                 str(tmp_path / "m.pkl")]) == 3
    ok = tmp_path / "ok.csv"
    ok.write_text("a,label\n1,0\n2,1\n")
    assert main(["train", "--train", str(ok), "--family", "logreg", "--params", '{"c": -1}',
                 "--out", str(tmp_path / "m.pkl")]) == 2
    holes = tmp_path / "holes.csv"
    holes.write_text("a,label\n1,0\n,1\n3,1\n")
    assert main(["train", "--train", str(holes), "--family", "logreg",
                 "--out", str(tmp_path / "m.pkl")]) == 4
