"""Edit-distance alignment of a prediction against its reference.

Omitted and redundant tokens are padded with the blank class so that both
aligned sequences have equal length and every position pairs one reference
class with one predicted class.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alphabet import Alphabet
from .errors import BlankInInput


class Op(str, enum.Enum):
    MATCH = "M"
    SUBSTITUTE = "S"
    INSERT = "I"  # redundant predicted token; reference side gets a blank
    DELETE = "D"  # omitted token; predicted side gets a blank


@dataclass(frozen=True)
class AlignedPair:
    ref_aligned: tuple[int, ...]
    pred_aligned: tuple[int, ...]
    ops: tuple[Op, ...]

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def distance(self) -> int:
        return sum(op is not Op.MATCH for op in self.ops)


def _suffix_table(a: Sequence[int], b: Sequence[int]) -> np.ndarray:
    """D[i, j] = edit distance between a[i:] and b[j:]."""
    n, m = len(a), len(b)
    D = np.zeros((n + 1, m + 1), dtype=np.int64)
    D[n, :] = np.arange(m, -1, -1)
    D[:, m] = np.arange(n, -1, -1)
    for i in range(n - 1, -1, -1):
        ai = a[i]
        for j in range(m - 1, -1, -1):
            D[i, j] = min(
                D[i + 1, j + 1] + (ai != b[j]),
                D[i + 1, j] + 1,
                D[i, j + 1] + 1,
            )
    return D


def edit_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Unit-cost Levenshtein distance (two-row prefix DP)."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j - 1] + (x != y), prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[-1]


def align(reference: Sequence[int], predicted: Sequence[int], alphabet: Alphabet) -> AlignedPair:
    """Optimal unit-cost alignment with fixed tie-breaking.

    Among optimal moves, a diagonal step (match or substitution) wins over a
    deletion, which wins over an insertion.  Ties are resolved walking from the
    start of both sequences, so a repeated predicted token is reported as the
    later of the two (``cat`` vs ``caat`` aligns as ``ca⌀t``).
    """
    for name, seq in (("reference", reference), ("predicted", predicted)):
        for c in seq:
            if not alphabet.is_ordinary(c):
                raise BlankInInput(f"{name} contains reserved or out-of-range class {c}")
    a = [int(c) for c in reference]
    b = [int(c) for c in predicted]
    D = _suffix_table(a, b)
    blank = alphabet.blank
    n, m = len(a), len(b)
    i = j = 0
    ra, pa, ops = [], [], []
    while i < n or j < m:
        here = D[i, j]
        if i < n and j < m and D[i + 1, j + 1] + (a[i] != b[j]) == here:
            ra.append(a[i])
            pa.append(b[j])
            ops.append(Op.MATCH if a[i] == b[j] else Op.SUBSTITUTE)
            i += 1
            j += 1
        elif i < n and D[i + 1, j] + 1 == here:
            ra.append(a[i])
            pa.append(blank)
            ops.append(Op.DELETE)
            i += 1
        else:
            ra.append(blank)
            pa.append(b[j])
            ops.append(Op.INSERT)
            j += 1
    return AlignedPair(tuple(ra), tuple(pa), tuple(ops))
