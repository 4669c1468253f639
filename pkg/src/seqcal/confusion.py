"""Global and context-conditioned confusion statistics.

Counts are stored sparsely: a context is present only once a position with that
preceding reference class has been ingested, and within a matrix only observed
rows and cells are kept.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .alignment import AlignedPair
from .errors import AlphabetMismatch, DomainError, FormatError


class ConfusionMatrix:
    """Sparse ``K_total x K_total`` count matrix; ``c[i][j]`` = ref i predicted as j."""

    def __init__(self, k_total: int):
        self.k_total = k_total
        self.rows: dict[int, dict[int, int]] = defaultdict(lambda: defaultdict(int))

    def add(self, i: int, j: int, n: int = 1) -> None:
        self.rows[i][j] += n

    def get(self, i: int, j: int) -> int:
        row = self.rows.get(i)
        return row.get(j, 0) if row else 0

    def row(self, i: int) -> np.ndarray:
        out = np.zeros(self.k_total)
        for j, n in self.rows.get(i, {}).items():
            out[j] = n
        return out

    def row_total(self, i: int) -> int:
        return sum(self.rows.get(i, {}).values())

    def row_error_rate(self, i: int) -> float:
        total = self.row_total(i)
        if total == 0:
            raise ZeroDivisionError(f"row {i} has no support")
        return 1.0 - self.get(i, i) / total

    def total(self) -> int:
        return sum(sum(r.values()) for r in self.rows.values())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.k_total, self.k_total), dtype=np.int64)
        for i, row in self.rows.items():
            for j, n in row.items():
                out[i, j] = n
        return out

    def error_prone(self, T: float) -> frozenset[int]:
        out = set()
        for i, row in self.rows.items():
            total = sum(row.values())
            if total > 0 and 1.0 - row.get(i, 0) / total > T:
                out.add(i)
        return frozenset(out)

    def merge_into(self, other: "ConfusionMatrix") -> None:
        for i, row in other.rows.items():
            for j, n in row.items():
                self.rows[i][j] += n

    def to_json(self) -> dict:
        return {
            str(i): {str(j): int(row[j]) for j in sorted(row) if row[j]}
            for i, row in sorted(self.rows.items())
            if any(row.values())
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and self.k_total == other.k_total and self.to_json() == other.to_json()


class ContextConfusionStats:
    """Per-context confusion matrices keyed by the preceding reference class."""

    def __init__(self, k_total: int):
        if k_total < 4:
            raise DomainError(f"K_total must be at least 4, got {k_total}")
        self.k_total = k_total
        self.contexts: dict[int, ConfusionMatrix] = {}
        self.global_matrix = ConfusionMatrix(k_total)

    @property
    def blank(self) -> int:
        return self.k_total - 2

    @property
    def sos(self) -> int:
        return self.k_total - 1

    def context(self, k: int) -> ConfusionMatrix | None:
        return self.contexts.get(k)

    def accumulate(self, aligned: AlignedPair) -> "ContextConfusionStats":
        k = self.sos
        for i, j in zip(aligned.ref_aligned, aligned.pred_aligned):
            cm = self.contexts.get(k)
            if cm is None:
                cm = self.contexts[k] = ConfusionMatrix(self.k_total)
            cm.add(i, j)
            self.global_matrix.add(i, j)
            if i != self.blank:
                k = i
        return self

    def accumulate_many(self, pairs: Iterable[AlignedPair]) -> "ContextConfusionStats":
        for p in pairs:
            self.accumulate(p)
        return self

    def total(self) -> int:
        return self.global_matrix.total()

    def to_json(self) -> dict:
        return {
            "K_total": self.k_total,
            "contexts": {str(k): {"rows": self.contexts[k].to_json()} for k in sorted(self.contexts)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: Mapping) -> "ContextConfusionStats":
        try:
            k_total = int(obj["K_total"])
            stats = cls(k_total)
            for k_str, ctx in obj["contexts"].items():
                k = int(k_str)
                for i_str, row in ctx["rows"].items():
                    i = int(i_str)
                    for j_str, n in row.items():
                        j = int(j_str)
                        if not (0 <= k < k_total and 0 <= i < k_total and 0 <= j < k_total):
                            raise FormatError(f"index out of range in context {k}, cell ({i}, {j})")
                        if not isinstance(n, int) or n < 0:
                            raise FormatError(f"count must be a non-negative integer, got {n!r}")
                        if n == 0:
                            continue
                        stats.contexts.setdefault(k, ConfusionMatrix(k_total)).add(i, j, n)
                        stats.global_matrix.add(i, j, n)
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed stats file: {exc!r}") from None
        return stats

    def __eq__(self, other) -> bool:
        return isinstance(other, ContextConfusionStats) and self.to_json() == other.to_json()


def accumulate(stats: ContextConfusionStats, aligned: AlignedPair) -> ContextConfusionStats:
    return stats.accumulate(aligned)


def merge(a: ContextConfusionStats, b: ContextConfusionStats) -> ContextConfusionStats:
    """Entrywise sum into a fresh object; neither argument is modified."""
    if a.k_total != b.k_total:
        raise AlphabetMismatch(f"cannot merge stats with K_total {a.k_total} and {b.k_total}")
    out = ContextConfusionStats(a.k_total)
    for src in (a, b):
        for k, cm in src.contexts.items():
            out.contexts.setdefault(k, ConfusionMatrix(a.k_total)).merge_into(cm)
        out.global_matrix.merge_into(src.global_matrix)
    return out


@dataclass(frozen=True)
class ErrorProneSets:
    T: float
    global_set: frozenset[int]
    per_context: dict[int, frozenset[int]] = field(default_factory=dict)

    def for_context(self, k: int) -> frozenset[int]:
        return self.per_context.get(k, frozenset())


def error_prone_sets(stats: ContextConfusionStats, T: float) -> ErrorProneSets:
    """Classes whose row error rate strictly exceeds ``T``; unseen rows never qualify."""
    if not (0.0 <= T < 1.0):
        raise DomainError(f"threshold T must lie in [0, 1), got {T}")
    per_context = {}
    for k, cm in stats.contexts.items():
        s = cm.error_prone(T)
        if s:
            per_context[k] = s
    return ErrorProneSets(T, stats.global_matrix.error_prone(T), per_context)
