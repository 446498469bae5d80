from .metrics import auroc, roc_points, tnr_at_tpr
from .splits import split_dataset, split_indices
from .experiment import (
    EvalReport,
    EvalRow,
    ExperimentConfig,
    SetupSpec,
    run_experiment,
    train_detectors,
)
from .report import emit_report, load_report, parse_summary

__all__ = [
    "EvalReport",
    "EvalRow",
    "ExperimentConfig",
    "SetupSpec",
    "auroc",
    "emit_report",
    "load_report",
    "parse_summary",
    "roc_points",
    "run_experiment",
    "split_dataset",
    "split_indices",
    "tnr_at_tpr",
    "train_detectors",
]
