"""Sequence-level calibration metrics: accuracy, Brier score, ECE, WER.

A sequence is correct only on an exact match with its reference.  Its
confidence is the product of chosen-token confidences; an empty prediction is
scored wrong with confidence 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .alignment import edit_distance
from .alphabet import PredictionRecord
from .errors import DomainError, EmptyInput, EmptyPrediction

DEFAULT_BINS = 15


@dataclass(frozen=True)
class ReliabilityBin:
    lower: float
    upper: float
    count: int
    accuracy: float
    confidence: float


@dataclass(frozen=True)
class CalibrationReport:
    n: int
    sequence_accuracy: float
    mean_confidence: float
    brier: float
    ece: float
    wer: float
    bins: tuple[ReliabilityBin, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = [asdict(b) for b in self.bins]
        return d

    def top_bin(self) -> ReliabilityBin | None:
        """Highest non-empty bin."""
        filled = [b for b in self.bins if b.count]
        return filled[-1] if filled else None


def sequence_confidence(record: PredictionRecord) -> float:
    confs = record.token_confidences()
    if len(confs) == 0:
        raise EmptyPrediction(f"record {record.id!r} has an empty prediction")
    return math.prod(confs)


def _scored(records: Sequence[PredictionRecord]) -> tuple[np.ndarray, np.ndarray]:
    if len(records) == 0:
        raise EmptyInput("no records")
    conf = np.empty(len(records))
    correct = np.empty(len(records))
    for n, r in enumerate(records):
        if len(r.predicted) == 0:
            conf[n], correct[n] = 0.0, 0.0
        else:
            conf[n] = sequence_confidence(r)
            correct[n] = float(r.correct)
    return conf, correct


def brier_score(records: Sequence[PredictionRecord]) -> float:
    conf, correct = _scored(records)
    return math.fsum((correct - conf) ** 2) / len(conf)


def bin_index(conf: np.ndarray, M: int) -> np.ndarray:
    """0-based bin per confidence; bin m covers (m/M, (m+1)/M], bin 0 also holds 0."""
    edges = np.arange(1, M + 1) / M
    return np.minimum(np.searchsorted(edges, conf, side="left"), M - 1)


def _bins(conf: np.ndarray, correct: np.ndarray, M: int) -> tuple[float, tuple[ReliabilityBin, ...]]:
    if M < 1:
        raise DomainError(f"bin count must be >= 1, got {M}")
    N = len(conf)
    idx = bin_index(conf, M)
    bins, terms = [], []
    for m in range(M):
        sel = idx == m
        cnt = int(sel.sum())
        if cnt:
            acc = math.fsum(correct[sel]) / cnt
            mc = math.fsum(conf[sel]) / cnt
            terms.append(cnt / N * abs(acc - mc))
        else:
            acc = mc = 0.0
        bins.append(ReliabilityBin(m / M, (m + 1) / M, cnt, acc, mc))
    return math.fsum(terms), tuple(bins)


def ece(records: Sequence[PredictionRecord], M: int = DEFAULT_BINS) -> tuple[float, tuple[ReliabilityBin, ...]]:
    conf, correct = _scored(records)
    return _bins(conf, correct, M)


def ece_from_bins(bins: Sequence[ReliabilityBin]) -> float:
    N = sum(b.count for b in bins)
    return math.fsum(b.count / N * abs(b.accuracy - b.confidence) for b in bins if b.count)


def wer(records: Sequence[PredictionRecord]) -> float:
    total = sum(len(r.reference) for r in records)
    if total < 1:
        raise EmptyInput("no reference tokens")
    return sum(edit_distance(r.reference, r.predicted) for r in records) / total


def evaluate(records: Sequence[PredictionRecord], M: int = DEFAULT_BINS) -> CalibrationReport:
    conf, correct = _scored(records)
    N = len(conf)
    e, bins = _bins(conf, correct, M)
    return CalibrationReport(
        n=N,
        sequence_accuracy=math.fsum(correct) / N,
        mean_confidence=math.fsum(conf) / N,
        brier=math.fsum((correct - conf) ** 2) / N,
        ece=e,
        wer=wer(records),
        bins=bins,
    )
