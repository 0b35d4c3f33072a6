"""Metrics, folds, synthetic data and the regime engine."""

from .data import BilingualData, FeatureTable
from .folds import FoldAssignment, stratified_subject_subset, subject_stratified_kfold
from .metrics import auroc, macro_f1
from .regimes import (
    OT_METHODS,
    REGIMES,
    LeakageError,
    RegimeResult,
    RegimeSpec,
    Settings,
    check_disjoint,
    run_regime,
)
from .report import ExperimentReport, ReportRow
from .synth import SynthCorpusSpec, SyntheticData, generate_synthetic_corpus
from ..stats import paired_ttest

__all__ = [
    "BilingualData", "ExperimentReport", "FeatureTable", "FoldAssignment", "LeakageError",
    "OT_METHODS", "REGIMES", "RegimeResult", "RegimeSpec", "ReportRow", "Settings",
    "SynthCorpusSpec", "SyntheticData", "auroc", "check_disjoint", "generate_synthetic_corpus",
    "macro_f1", "paired_ttest", "run_regime", "stratified_subject_subset",
    "subject_stratified_kfold",
]
