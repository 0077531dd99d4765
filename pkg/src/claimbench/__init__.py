"""Imbalanced binary-classification toolkit and benchmark harness for
claim occurrence prediction: SMOTE oversampling, class-weight balancing,
five learner families, imbalance-aware metrics, and leakage-safe
cross-validated model selection."""

from .data import (
    Dataset,
    FeatureSchema,
    SplitIndices,
    encode,
    fit_schema,
    read_csv,
    stratified_split,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    confusion_matrix,
    full_report,
    gini,
    pr_auc,
    precision_recall_f1,
    roc_auc,
)
from .resample import (
    ClassWeights,
    SmoteConfig,
    balanced_class_weights,
    scale_pos_weight,
    smote_oversample,
)
from .selection import (
    CvResult,
    HyperGrid,
    LearnerSpec,
    PipelineSpec,
    fit_pipeline,
    grid_search,
    leakage_demo,
    stratified_kfold,
)
from .synth import SyntheticSpec, generate_synthetic
from .benchmark import BenchmarkConfig, BenchmarkReport, emit_reports, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "BenchmarkConfig",
    "BenchmarkReport",
    "ClassWeights",
    "ConfusionMatrix",
    "CvResult",
    "Dataset",
    "FeatureSchema",
    "HyperGrid",
    "LearnerSpec",
    "MetricsReport",
    "PipelineSpec",
    "SmoteConfig",
    "SplitIndices",
    "SyntheticSpec",
    "balanced_class_weights",
    "confusion_matrix",
    "emit_reports",
    "encode",
    "fit_pipeline",
    "fit_schema",
    "full_report",
    "generate_synthetic",
    "gini",
    "grid_search",
    "leakage_demo",
    "pr_auc",
    "precision_recall_f1",
    "read_csv",
    "roc_auc",
    "run_benchmark",
    "scale_pos_weight",
    "smote_oversample",
    "stratified_kfold",
    "stratified_split",
]
