"""Token vocabulary and prediction records.

The class space holds ``K`` ordinary classes followed by two reserved indices:
``blank`` (alignment filler) at ``K`` and ``sos`` (start-of-sequence context)
at ``K + 1``.  Prediction logs are JSON Lines; see :func:`record_from_json`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ArgmaxMismatch,
    FormatError,
    IndexOutOfRange,
    LengthMismatch,
    NotADistribution,
    UsageError,
)

DIST_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    K: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.K < 2:
            raise UsageError(f"alphabet needs K >= 2 ordinary classes, got {self.K}")
        if self.names is not None and len(self.names) != self.K:
            raise UsageError(f"expected {self.K} class names, got {len(self.names)}")

    @property
    def blank(self) -> int:
        return self.K

    @property
    def sos(self) -> int:
        return self.K + 1

    @property
    def size(self) -> int:
        """K_total: ordinary classes plus blank and SOS."""
        return self.K + 2

    def is_ordinary(self, c: int) -> bool:
        return 0 <= c < self.K

    def name(self, c: int) -> str:
        if c == self.blank:
            return "<blank>"
        if c == self.sos:
            return "<sos>"
        if self.names is not None:
            return self.names[c]
        return str(c)

    @classmethod
    def from_size(cls, k_total: int) -> "Alphabet":
        return cls(k_total - 2)


@dataclass(frozen=True)
class PredictionRecord:
    """One decoded sequence.

    Exactly one of ``conf`` (chosen-token confidences, scalar mode) or ``dists``
    (full per-position distributions over the class space) is set.
    """

    id: str
    reference: tuple[int, ...]
    predicted: tuple[int, ...]
    conf: tuple[float, ...] | None = None
    dists: tuple[tuple[float, ...], ...] | None = field(default=None, repr=False)

    @property
    def full_mode(self) -> bool:
        return self.dists is not None

    @property
    def correct(self) -> bool:
        return self.predicted == self.reference

    def token_confidences(self) -> tuple[float, ...]:
        if self.dists is not None:
            return tuple(d[c] for d, c in zip(self.dists, self.predicted))
        return self.conf if self.conf is not None else ()

    def dist_array(self) -> np.ndarray:
        if self.dists is None:
            raise ValueError(f"record {self.id!r} is in scalar mode")
        return np.asarray(self.dists, dtype=float).reshape(len(self.dists), -1)


def make_record(id, reference, predicted, conf=None, dists=None) -> PredictionRecord:
    """Build a record, coercing sequences and numpy arrays into tuples."""
    if dists is not None:
        dists = tuple(tuple(float(x) for x in row) for row in np.asarray(dists, dtype=float))
        conf = None
    elif conf is not None:
        conf = tuple(float(x) for x in conf)
    elif len(predicted) == 0:
        conf = ()
    return PredictionRecord(
        id=str(id),
        reference=tuple(int(c) for c in reference),
        predicted=tuple(int(c) for c in predicted),
        conf=conf,
        dists=dists,
    )


def _check_ids(seq: Sequence[int], alphabet: Alphabet, what: str, rid: str) -> None:
    for t, c in enumerate(seq):
        if not alphabet.is_ordinary(c):
            kind = "reserved class" if 0 <= c < alphabet.size else "class id out of range"
            raise IndexOutOfRange(f"record {rid!r}: {what}[{t}] = {c} is a {kind} (K={alphabet.K})")


def validate_record(record: PredictionRecord, alphabet: Alphabet) -> PredictionRecord:
    rid = record.id
    if len(record.reference) < 1:
        raise LengthMismatch(f"record {rid!r}: empty reference")
    _check_ids(record.reference, alphabet, "ref", rid)
    _check_ids(record.predicted, alphabet, "pred", rid)

    if record.dists is not None:
        if len(record.dists) != len(record.predicted):
            raise LengthMismatch(
                f"record {rid!r}: {len(record.dists)} distributions for {len(record.predicted)} predicted tokens"
            )
        for t, (row, c) in enumerate(zip(record.dists, record.predicted)):
            if len(row) != alphabet.size:
                raise LengthMismatch(
                    f"record {rid!r}: distribution {t} has {len(row)} entries, expected {alphabet.size}"
                )
            if any(not math.isfinite(p) or p < 0 for p in row):
                raise NotADistribution(f"record {rid!r}: distribution {t} has negative or non-finite entries")
            s = math.fsum(row)
            if abs(s - 1.0) > DIST_TOL:
                raise NotADistribution(f"record {rid!r}: distribution {t} sums to {s!r}")
            if row[c] < max(row):
                raise ArgmaxMismatch(f"record {rid!r}: position {t} predicts {c} but argmax is {int(np.argmax(row))}")
    else:
        conf = record.conf if record.conf is not None else ()
        if len(conf) != len(record.predicted):
            raise LengthMismatch(
                f"record {rid!r}: {len(conf)} confidences for {len(record.predicted)} predicted tokens"
            )
        for t, p in enumerate(conf):
            if not (0.0 < p <= 1.0):
                raise NotADistribution(f"record {rid!r}: confidence {t} = {p!r} outside (0, 1]")
    return record


# --- JSONL wire format -------------------------------------------------------


def _int_list(obj, key: str, rid) -> list[int]:
    value = obj.get(key)
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise FormatError(f"record {rid!r}: field {key!r} must be a list of integers")
    return value


def record_from_json(obj: dict) -> PredictionRecord:
    if not isinstance(obj, dict):
        raise FormatError("record must be a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str):
        raise FormatError(f"record id must be a string, got {rid!r}")
    ref = _int_list(obj, "ref", rid)
    pred = _int_list(obj, "pred", rid)
    try:
        if "dists" in obj:
            return make_record(rid, ref, pred, dists=obj["dists"])
        if "conf" in obj:
            return make_record(rid, ref, pred, conf=obj["conf"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"record {rid!r}: malformed numeric field ({exc})") from None
    if pred:
        raise FormatError(f"record {rid!r}: needs 'conf' or 'dists' for a non-empty prediction")
    return make_record(rid, ref, pred)


def record_to_json(record: PredictionRecord) -> dict:
    obj = {"id": record.id, "ref": list(record.reference), "pred": list(record.predicted)}
    if record.dists is not None:
        obj["dists"] = [list(row) for row in record.dists]
    else:
        obj["conf"] = list(record.conf or ())
    return obj


def parse_jsonl(lines: Iterable[str], source: str = "<input>") -> Iterator[PredictionRecord]:
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{source}:{lineno}: invalid JSON ({exc.msg})") from None
        try:
            yield record_from_json(obj)
        except FormatError as exc:
            raise FormatError(f"{source}:{lineno}: {exc}") from None


def read_jsonl(path: str | Path) -> list[PredictionRecord]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return list(parse_jsonl(fh, str(path)))


def write_jsonl(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec)))
            fh.write("\n")
