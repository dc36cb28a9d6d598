"""Compare no resampling, random oversampling and SMOTE on the rare class.

Each strategy runs the same forest over the same split; only the training
folds are rebalanced, so the test set is identical across the three runs.
"""
import tempfile
from pathlib import Path

from skewlearn.pipeline import PipelineConfig, run_pipeline

root = Path(tempfile.mkdtemp(prefix="skewlearn-ablation-"))
base = {
    "data": {"synth": {"class_counts": [1200, 360, 90], "dims": 10, "separation": 1.5,
                       "seed": 3}},
    "learners": {"random_forest": {"n_estimators": [100], "max_depth": [8]}},
    "cv_folds": 3,
    "seed": 1,
}

print(f"{'strategy':<13}{'rare recall':>12}{'rare F1':>10}{'weighted AUC':>14}")
for strategy in ("none", "random_over", "smote"):
    cfg = PipelineConfig.from_dict(base, out=root / strategy, strategy=strategy)
    rep = run_pipeline(cfg).reports["random_forest"]
    rare = rep["test"]["per_class"][-1]
    print(f"{strategy:<13}{rare['recall']:>12.3f}{rare['f1']:>10.3f}"
          f"{rep['test']['weighted']['auc']:>14.3f}")
