"""End-to-end comparison of Uncalibrated, LS, TS, SLS and CASLS on the synthetic task."""

from __future__ import annotations

import csv
import hashlib
import io
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping

from . import _json
from .alignment import align
from .confusion import ContextConfusionStats, ErrorProneSets, error_prone_sets
from .diagram import write_svg
from .errors import DomainError
from .metrics import DEFAULT_BINS, CalibrationReport, evaluate
from .smoothing import Normalization, SmoothingConfig
from .synth import (
    GlyphIndexer,
    SynthTaskSpec,
    ToyModel,
    TrainConfig,
    build_targets,
    decode,
    generate,
    token_batch,
    train,
)
from .temperature import Temperature, fit_temperature, rescale_record

METHODS = ("Uncalibrated", "LS", "TS", "SLS", "CASLS")


@dataclass(frozen=True)
class Protocol:
    """Training and calibration settings for :func:`run_experiment`.

    ``ls_alpha`` is a fixed per-token strength (classic label smoothing);
    SLS and CASLS use the sequence-level ``alpha_prime`` with optional
    length adaptation.
    """

    ce_epochs: int = 800
    ft_epochs: int = 200
    lr: float = 1.0
    T: float = 0.15
    alpha_prime: float = 0.6
    adaptive: bool = True
    normalization: str = "Renormalized"
    ls_alpha: float = 0.1
    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.bins < 1:
            raise DomainError("bins must be >= 1")
        if self.ce_epochs < 0 or self.ft_epochs < 0 or self.lr < 0:
            raise DomainError("epochs and learning rate must be non-negative")
        SmoothingConfig(alpha_prime=self.alpha_prime, T=self.T, normalization=self.normalization)
        SmoothingConfig(alpha_prime=self.ls_alpha)

    @classmethod
    def from_json(cls, obj: Mapping) -> "Protocol":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise DomainError(f"unknown protocol keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class ExperimentResult:
    spec: SynthTaskSpec
    protocol: Protocol
    reports: dict[str, CalibrationReport]
    stats: ContextConfusionStats
    sets: ErrorProneSets
    temperature: Temperature
    stats_hash_before: str
    stats_hash_after: str
    loss_curves: dict[str, list[float]] = field(default_factory=dict)
    seconds: float = 0.0

    def summary_rows(self) -> list[dict]:
        return summary_rows(self.reports)

    def summary_csv(self) -> str:
        buf = io.StringIO()
        rows = self.summary_rows()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


def stats_digest(stats: ContextConfusionStats) -> str:
    return hashlib.sha256(stats.dumps().encode()).hexdigest()


def relative_change(value: float, baseline: float) -> str:
    if baseline == 0:
        return ""
    pct = round(100.0 * (value - baseline) / baseline)
    sign = "+" if pct > 0 else ("−" if pct < 0 else "")
    return f"({sign}{abs(pct)}%)"


def summary_rows(reports: Mapping[str, CalibrationReport]) -> list[dict]:
    base = reports["Uncalibrated"]
    rows = []
    for name, r in reports.items():
        rows.append(
            {
                "method": name,
                "acc_pct": f"{100 * r.sequence_accuracy:.2f}",
                "ece_pct": f"{100 * r.ece:.2f}",
                "ece_change": "" if name == "Uncalibrated" else relative_change(r.ece, base.ece),
                "brier_pct": f"{100 * r.brier:.2f}",
                "brier_change": "" if name == "Uncalibrated" else relative_change(r.brier, base.brier),
                "mean_conf_pct": f"{100 * r.mean_confidence:.2f}",
                "wer_pct": f"{100 * r.wer:.2f}",
            }
        )
    return rows


def build_stats(records, alphabet) -> ContextConfusionStats:
    stats = ContextConfusionStats(alphabet.size)
    for r in records:
        stats.accumulate(align(r.reference, r.predicted, alphabet))
    return stats


def run_experiment(spec: SynthTaskSpec, protocol: Protocol = Protocol()) -> ExperimentResult:
    t0 = time.perf_counter()
    alphabet = spec.alphabet
    indexer = GlyphIndexer(spec)
    train_ds, support_ds, test_ds = generate(spec)
    batch = token_batch(train_ds, indexer, alphabet)

    base, ce_curve = train(
        ToyModel.zeros(indexer.size, alphabet.size),
        batch,
        build_targets(train_ds, alphabet, "CE"),
        TrainConfig(protocol.ce_epochs, protocol.lr),
    )
    support_records = decode(base, support_ds, indexer, alphabet, "support-")
    stats = build_stats(support_records, alphabet)
    sets = error_prone_sets(stats, protocol.T)
    hash_before = stats_digest(stats)

    smooth = SmoothingConfig(
        alpha_prime=protocol.alpha_prime,
        T=protocol.T,
        adaptive=protocol.adaptive,
        normalization=Normalization(protocol.normalization),
    )
    ls_cfg = SmoothingConfig(alpha_prime=protocol.ls_alpha, adaptive=False)
    ft = TrainConfig(protocol.ft_epochs, protocol.lr)
    models = {"Uncalibrated": base}
    curves = {"CE": ce_curve}
    for mode, cfg in (("LS", ls_cfg), ("SLS", smooth), ("CASLS", smooth)):
        Q = build_targets(train_ds, alphabet, mode, cfg, stats, sets)
        models[mode], curves[mode] = train(base, batch, Q, ft)
    hash_after = stats_digest(stats)

    tau = fit_temperature(support_records, alphabet)
    test_base = decode(base, test_ds, indexer, alphabet, "test-")
    outputs = {
        "Uncalibrated": test_base,
        "TS": [rescale_record(r, tau.value) for r in test_base],
    }
    for mode in ("LS", "SLS", "CASLS"):
        outputs[mode] = decode(models[mode], test_ds, indexer, alphabet, "test-")
    reports = {name: evaluate(outputs[name], protocol.bins) for name in METHODS}
    return ExperimentResult(
        spec=spec,
        protocol=protocol,
        reports=reports,
        stats=stats,
        sets=sets,
        temperature=tau,
        stats_hash_before=hash_before,
        stats_hash_after=hash_after,
        loss_curves=curves,
        seconds=time.perf_counter() - t0,
    )


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Per-method JSON reports and SVG diagrams, the stats file and summary CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rep in result.reports.items():
        p = out / f"report_{name.lower()}.json"
        p.write_text(_json.dumps(report_json(rep, name)) + "\n", encoding="utf-8")
        s = out / f"reliability_{name.lower()}.svg"
        write_svg(rep, s, title=name)
        written += [p, s]
    p = out / "stats.json"
    p.write_text(result.stats.dumps() + "\n", encoding="utf-8")
    written.append(p)
    p = out / "summary.csv"
    p.write_text(result.summary_csv(), encoding="utf-8")
    written.append(p)
    p = out / "run.json"
    p.write_text(
        _json.dumps(
            {
                "temperature": result.temperature.value,
                "stats_sha256": result.stats_hash_before,
                "stats_frozen": result.stats_hash_before == result.stats_hash_after,
                "error_prone_global": sorted(result.sets.global_set),
                "error_prone_context": {str(k): sorted(v) for k, v in sorted(result.sets.per_context.items())},
                "protocol": asdict(result.protocol),
                "spec": result.spec.to_json(),
            }
        )
        + "\n",
        encoding="utf-8",
    )
    written.append(p)
    return written


def report_json(report: CalibrationReport, method: str | None = None) -> dict:
    d = {} if method is None else {"method": method}
    d.update(report.to_dict())
    return d


def directional_checks(reports: dict[str, CalibrationReport]) -> dict[str, bool]:
    """The five qualitative expectations for the synthetic comparison.

    a: the baseline is overconfident by at least 3 points;
    b: fixed label smoothing overshoots into underconfidence at the top;
    c: CASLS cuts baseline ECE by at least 30%;
    d: SLS helps, but not by more than 2 points beyond CASLS;
    e: CASLS costs at most 1 point of sequence accuracy.
    """
    u, ls, sls, cas = (reports[k] for k in ("Uncalibrated", "LS", "SLS", "CASLS"))
    top = ls.top_bin()
    return {
        "a": u.mean_confidence - u.sequence_accuracy >= 0.03,
        "b": top is not None and top.confidence < top.accuracy and ls.ece > u.ece,
        "c": cas.ece <= 0.7 * u.ece,
        "d": sls.ece < u.ece and (u.ece - sls.ece) <= (u.ece - cas.ece) + 0.02,
        "e": cas.sequence_accuracy >= u.sequence_accuracy - 0.01,
    }
