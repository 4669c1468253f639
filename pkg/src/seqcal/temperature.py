"""Temperature scaling baseline.

Stored distributions are turned back into logits by taking logs; the unknown
per-row additive constant cancels inside the softmax, so ``softmax(log p / tau)``
is well defined for any stored ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alignment import Op, align
from .alphabet import Alphabet, PredictionRecord, make_record
from .errors import DomainError, EmptyInput, NeedsFullMode
from .smoothing import PROB_FLOOR

TAU_BRACKET = (0.05, 20.0)
TAU_TOL = 1e-4
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Temperature:
    value: float = 1.0

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise DomainError(f"temperature must be positive and finite, got {self.value}")


def apply_temperature(logit_rows, tau: float) -> np.ndarray:
    if not tau > 0:
        raise DomainError(f"temperature must be positive, got {tau}")
    z = np.asarray(logit_rows, dtype=float) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _logits(record: PredictionRecord) -> np.ndarray:
    return np.log(np.maximum(record.dist_array(), PROB_FLOOR))


def nll_terms(records: Sequence[PredictionRecord], alphabet: Alphabet) -> tuple[np.ndarray, np.ndarray]:
    """Stack (logits, reference class) for every aligned position with both sides non-blank."""
    rows, labels = [], []
    for r in records:
        if not r.full_mode:
            raise NeedsFullMode(f"record {r.id!r} stores scalar confidences only; temperature fitting needs dists")
        if not r.predicted:
            continue
        z = _logits(r)
        pair = align(r.reference, r.predicted, alphabet)
        t = 0
        for ref_c, op in zip(pair.ref_aligned, pair.ops):
            if op in (Op.MATCH, Op.SUBSTITUTE):
                rows.append(z[t])
                labels.append(ref_c)
            if op is not Op.DELETE:
                t += 1
    if not rows:
        raise EmptyInput("no aligned positions to fit on")
    return np.asarray(rows), np.asarray(labels)


def _nll(Z: np.ndarray, y: np.ndarray, tau: float) -> float:
    z = Z / tau
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(y)), y]))


def temperature_nll(records: Sequence[PredictionRecord], alphabet: Alphabet, tau: float) -> float:
    """Mean token NLL of reference classes under ``softmax(log p / tau)``."""
    if not tau > 0:
        raise DomainError(f"temperature must be positive, got {tau}")
    Z, y = nll_terms(records, alphabet)
    return _nll(Z, y, tau)


def golden_section(f, lo: float, hi: float, tol: float = TAU_TOL) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def fit_temperature(
    records: Sequence[PredictionRecord],
    alphabet: Alphabet,
    bracket: tuple[float, float] = TAU_BRACKET,
    tol: float = TAU_TOL,
) -> Temperature:
    Z, y = nll_terms(records, alphabet)
    tau = golden_section(lambda t: _nll(Z, y, t), bracket[0], bracket[1], tol)
    return Temperature(tau)


def rescale_record(record: PredictionRecord, tau: float) -> PredictionRecord:
    """Full-mode record with every distribution re-tempered; predictions are kept."""
    if not record.full_mode:
        raise NeedsFullMode(f"record {record.id!r} stores scalar confidences only")
    if not record.predicted:
        return record
    return make_record(record.id, record.reference, record.predicted, dists=apply_temperature(_logits(record), tau))
