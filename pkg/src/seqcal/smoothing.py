"""Soft targets for LS, SLS and CASLS, plus the soft-target cross-entropy loss.

A soft target is a length ``K_total`` float vector.  Sequence targets are
stacked into an ``(L, K_total)`` array.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alphabet import Alphabet
from .confusion import ConfusionMatrix, ContextConfusionStats, ErrorProneSets
from .errors import BlankInInput, DomainError, EmptyRow, LengthMismatch, MissingStats

PROB_FLOOR = 1e-300


class Mode(str, enum.Enum):
    LS = "LS"
    SLS = "SLS"
    CASLS = "CASLS"


class Normalization(str, enum.Enum):
    AS_WRITTEN = "AsWritten"
    RENORMALIZED = "Renormalized"


@dataclass(frozen=True)
class SmoothingConfig:
    mode: Mode = Mode.CASLS
    alpha_prime: float = 0.05
    T: float = 0.5
    adaptive: bool = True
    normalization: Normalization = Normalization.RENORMALIZED

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if not (0.0 < self.alpha_prime < 1.0):
            raise DomainError(f"alpha_prime must lie in (0, 1), got {self.alpha_prime}")
        if not (0.0 <= self.T < 1.0):
            raise DomainError(f"T must lie in [0, 1), got {self.T}")

    def alpha_for(self, L: int) -> float:
        return adaptive_alpha(self.alpha_prime, L) if self.adaptive else self.alpha_prime


def adaptive_alpha(alpha_prime: float, L: int) -> float:
    """Per-token strength whose L-fold retained mass equals ``1 - alpha_prime``."""
    if not (0.0 < alpha_prime < 1.0):
        raise DomainError(f"alpha_prime must lie in (0, 1), got {alpha_prime}")
    if L < 1:
        raise DomainError(f"sequence length must be >= 1, got {L}")
    return -math.expm1(math.log1p(-alpha_prime) / L)


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")


def smooth_ls(y: int, alpha: float, k_total: int) -> np.ndarray:
    _check_alpha(alpha)
    if not 0 <= y < k_total:
        raise DomainError(f"class {y} outside [0, {k_total})")
    q = np.full(k_total, alpha / (k_total - 1))
    q[y] = 1.0 - alpha
    return q


def _smooth_row(y: int, alpha: float, row: np.ndarray, normalization: Normalization) -> np.ndarray:
    total = row.sum()
    if total <= 0:
        raise EmptyRow(f"class {y} is error-prone but its confusion row is empty")
    off = row.copy()
    off[y] = 0.0
    if normalization is Normalization.RENORMALIZED:
        denom = off.sum()
        if denom <= 0:  # no off-diagonal mass: nothing to spread onto
            q = np.zeros_like(row)
            q[y] = 1.0
            return q
    else:
        denom = total
    q = alpha * off / denom
    q[y] = 1.0 - alpha
    return q


def smooth_sls(
    y: int,
    alpha: float,
    matrix: ConfusionMatrix,
    E: frozenset[int] | set[int],
    normalization: Normalization = Normalization.RENORMALIZED,
) -> np.ndarray:
    _check_alpha(alpha)
    normalization = Normalization(normalization)
    if y not in E:
        q = np.zeros(matrix.k_total)
        q[y] = 1.0
        return q
    return _smooth_row(y, alpha, matrix.row(y), normalization)


def smooth_casls(
    y: int,
    y_prev: int,
    alpha: float,
    stats: ContextConfusionStats,
    sets: ErrorProneSets,
    normalization: Normalization = Normalization.RENORMALIZED,
) -> np.ndarray:
    matrix = stats.context(y_prev)
    if matrix is None:
        _check_alpha(alpha)
        q = np.zeros(stats.k_total)
        q[y] = 1.0
        return q
    return smooth_sls(y, alpha, matrix, sets.for_context(y_prev), normalization)


def sequence_targets(
    reference: Sequence[int],
    config: SmoothingConfig,
    alphabet: Alphabet,
    stats: ContextConfusionStats | None = None,
    sets: ErrorProneSets | None = None,
) -> np.ndarray:
    """Stacked ``(L, K_total)`` targets; one ``alpha`` is shared by the whole sequence."""
    L = len(reference)
    if L < 1:
        raise DomainError("reference must be non-empty")
    for c in reference:
        if not alphabet.is_ordinary(c):
            raise BlankInInput(f"reference contains reserved or out-of-range class {c}")
    alpha = config.alpha_for(L)
    if config.mode is Mode.LS:
        return np.stack([smooth_ls(y, alpha, alphabet.size) for y in reference])
    if stats is None:
        raise MissingStats(f"{config.mode.value} targets need confusion statistics")
    if stats.k_total != alphabet.size:
        raise DomainError(f"stats K_total {stats.k_total} does not match alphabet size {alphabet.size}")
    if sets is None:
        from .confusion import error_prone_sets

        sets = error_prone_sets(stats, config.T)
    out = np.empty((L, alphabet.size))
    prev = alphabet.sos
    for t, y in enumerate(reference):
        if config.mode is Mode.SLS:
            out[t] = smooth_sls(y, alpha, stats.global_matrix, sets.global_set, config.normalization)
        else:
            out[t] = smooth_casls(y, prev, alpha, stats, sets, config.normalization)
        prev = y
    return out


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    return np.log(np.maximum(p, PROB_FLOOR))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def casls_loss(logit_rows, targets) -> tuple[float, np.ndarray]:
    """Mean soft-target cross-entropy over one sequence and its logit gradient.

    Returns ``(loss, grad)`` with ``grad`` shaped like ``logit_rows``.  The
    gradient is ``(p * sum(q) - q) / L``, which reduces to ``(p - q) / L`` for
    targets that sum to one.
    """
    Z = np.asarray(logit_rows, dtype=float)
    Q = np.asarray(targets, dtype=float)
    if Z.ndim != 2 or Z.shape != Q.shape:
        raise LengthMismatch(f"logits {Z.shape} and targets {Q.shape} must have equal (L, K_total) shapes")
    L = Z.shape[0]
    if L == 0:
        raise LengthMismatch("empty sequence")
    z = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(z)
    P = e / e.sum(axis=1, keepdims=True)
    logp = np.log(np.maximum(P, PROB_FLOOR))
    loss = -float(np.sum(Q * logp)) / L
    grad = (P * Q.sum(axis=1, keepdims=True) - Q) / L
    return loss, grad
