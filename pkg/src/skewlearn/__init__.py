"""skewlearn: multi-class imbalanced classification on tabular data with missing values."""
from .impute import ImputerModel, fit_imputer, mean_impute
from .impute import transform as impute_transform
from .learners import Family, FitError, LearnerSpec, ParamError, TrainedModel, feature_importance
from .learners import fit, predict, score
from .metrics import EvaluationReport, confusion, evaluate, prf, roc_auc, roc_curve, timed_fit
from .pipeline import ConfigError, PipelineConfig, StageError, run_pipeline
from .plots import emit_plots
from .preprocess import EncoderModel, ScalerModel, apply, fit_encoder, fit_scaler
from .resample import ResampledSet, ResampleSpec, random_oversample, resample, smote
from .search import HyperGrid, LeakageError, SearchResult, grid_search
from .synth import SynthSpec, generate
from .tabular import (ColumnKind, ColumnMeta, DataError, FoldPlan, TabularDataset, from_arrays,
                      load_csv, make_folds, stratified_holdout, write_csv)

__version__ = "0.1.0"

__all__ = [
    "ColumnKind", "ColumnMeta", "ConfigError", "DataError", "EncoderModel", "EvaluationReport",
    "Family", "FitError", "FoldPlan", "HyperGrid", "ImputerModel", "LeakageError", "LearnerSpec",
    "ParamError", "PipelineConfig", "ResampleSpec", "ResampledSet", "ScalerModel",
    "SearchResult", "StageError", "SynthSpec", "TabularDataset", "TrainedModel", "apply",
    "confusion", "emit_plots", "evaluate", "feature_importance", "fit", "fit_encoder",
    "fit_imputer", "fit_scaler", "from_arrays", "generate", "grid_search", "impute_transform",
    "load_csv", "make_folds", "mean_impute", "predict", "prf", "random_oversample", "resample",
    "roc_auc", "roc_curve", "run_pipeline", "score", "smote", "stratified_holdout",
    "timed_fit", "write_csv",
]
