# Copyright (c) mm-opinion-miner contributors
"""
Training, scoring and experiment protocols: cross-validation, multi-seed
runs, ablations and significance tests.
"""
__all__ = [
    "TrainConfig",
    "TrainResult",
    "MetricsReport",
    "FoldPlan",
    "RunManifest",
    "AggregateReport",
    "TTestResult",
    "train",
    "predict",
    "evaluate",
    "evaluate_chunks",
    "evaluate_sentiment",
    "cross_validate",
    "multi_seed",
    "ablate",
    "paired_ttest",
    "batching",
    "conll",
    "folds",
    "manifest",
    "metrics",
    "runner",
    "stats",
    "synthetic",
    "training",
]

from . import (
    batching, conll, folds, manifest, metrics, runner, stats, synthetic,
    training
)
from .folds import FoldPlan
from .manifest import RunManifest
from .metrics import MetricsReport, evaluate_chunks, evaluate_sentiment
from .runner import AggregateReport, ablate, cross_validate, multi_seed
from .stats import TTestResult, paired_ttest
from .training import TrainConfig, TrainResult, evaluate, predict, train
