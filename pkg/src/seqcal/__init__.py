"""Selective and context-aware label smoothing for sequence-recognition calibration."""

from .alignment import AlignedPair, Op, align, edit_distance
from .alphabet import Alphabet, PredictionRecord, make_record, read_jsonl, validate_record, write_jsonl
from .confusion import (
    ConfusionMatrix,
    ContextConfusionStats,
    ErrorProneSets,
    accumulate,
    error_prone_sets,
    merge,
)
from .metrics import CalibrationReport, ReliabilityBin, brier_score, ece, evaluate, sequence_confidence, wer
from .smoothing import (
    Mode,
    Normalization,
    SmoothingConfig,
    adaptive_alpha,
    casls_loss,
    sequence_targets,
    smooth_casls,
    smooth_ls,
    smooth_sls,
)
from .temperature import Temperature, apply_temperature, fit_temperature

__all__ = [
    "AlignedPair", "Alphabet", "CalibrationReport", "ConfusionMatrix", "ContextConfusionStats",
    "ErrorProneSets", "Mode", "Normalization", "Op", "PredictionRecord", "ReliabilityBin",
    "SmoothingConfig", "Temperature", "accumulate", "adaptive_alpha", "align", "apply_temperature",
    "brier_score", "casls_loss", "ece", "edit_distance", "error_prone_sets", "evaluate",
    "fit_temperature", "make_record", "merge", "read_jsonl", "sequence_confidence", "sequence_targets",
    "smooth_casls", "smooth_ls", "smooth_sls", "validate_record", "wer", "write_jsonl",
]
