from .forest import ForestModel, ForestParams, predict, train_forest
from .smote import SmoteSample, smote
from .stability import WeightReport, l1_logistic, stability_weights
from .validation import (
    FoldResult,
    MetricsReport,
    SmoteParams,
    SweepRow,
    binary_metrics,
    cross_validate,
    stratified_folds,
    sweep_csv,
    sweep_metrics_csv,
    sweep_thresholds,
    threshold_pairs,
)

__all__ = [
    "ForestModel",
    "ForestParams",
    "predict",
    "train_forest",
    "SmoteSample",
    "smote",
    "WeightReport",
    "l1_logistic",
    "stability_weights",
    "FoldResult",
    "MetricsReport",
    "SmoteParams",
    "SweepRow",
    "binary_metrics",
    "cross_validate",
    "stratified_folds",
    "sweep_csv",
    "sweep_metrics_csv",
    "sweep_thresholds",
    "threshold_pairs",
]
