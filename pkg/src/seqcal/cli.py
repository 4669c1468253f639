"""Command-line entry point: ``seqcal <subcommand> ...``.

Exit status is 0 on success, 1 for usage errors and 2 for data errors
(including unreadable input files).  Results go to files or stdout as JSON;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import _json
from .alignment import align
from .alphabet import Alphabet, PredictionRecord, read_jsonl, validate_record
from .confusion import ContextConfusionStats, error_prone_sets, merge
from .diagram import write_svg
from .errors import DataError, DomainError, EmptyInput, FormatError, UsageError
from .experiment import Protocol, report_json, run_experiment, write_outputs
from .metrics import DEFAULT_BINS, evaluate
from .smoothing import Mode, Normalization, SmoothingConfig, sequence_targets
from .synth import default_spec, load_spec
from .temperature import fit_temperature, temperature_nll

SEED_ENV = "SEQCAL_SEED"
DEFAULT_T = 0.5
DEFAULT_ALPHA_PRIME = 0.05


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """Resolved numeric settings shared by the subcommands."""

    K: int | None = None
    T: float = DEFAULT_T
    alpha_prime: float = DEFAULT_ALPHA_PRIME
    adaptive: bool = True
    normalization: str = "Renormalized"
    bins: int = DEFAULT_BINS
    seed: int = 0

    def __post_init__(self):
        if self.K is not None and self.K < 2:
            raise DomainError(f"--K must be >= 2, got {self.K}")
        if self.bins < 1:
            raise DomainError(f"--bins must be >= 1, got {self.bins}")
        SmoothingConfig(alpha_prime=self.alpha_prime, T=self.T, normalization=self.normalization)


def _positive_int(flag):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {s!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {v}")
        return v

    return conv


def _unit_interval(flag, open_low):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects a number, got {s!r}") from None
        ok = (0.0 < v < 1.0) if open_low else (0.0 <= v < 1.0)
        if not ok:
            rng = "(0, 1)" if open_low else "[0, 1)"
            raise argparse.ArgumentTypeError(f"{flag} must lie in {rng}, got {v}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqcal", description="Selective label smoothing and calibration tools for sequence recognition.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def k_flag(sp):
        sp.add_argument("--K", type=_positive_int("--K"), help="number of ordinary classes (inferred if omitted)")

    s = sub.add_parser("stats", help="build context confusion statistics from prediction logs")
    s.add_argument("--in", dest="inputs", action="append", required=True, metavar="LOG", help="JSONL log (repeatable)")
    k_flag(s)
    s.add_argument("--T", type=_unit_interval("--T", False), default=DEFAULT_T, help="error-prone threshold for the summary")
    s.add_argument("--out", help="stats file (default: stdout)")

    t = sub.add_parser("targets", help="write soft targets for reference sequences")
    t.add_argument("--stats", help="stats file (required for SLS and CASLS)")
    t.add_argument("--refs", required=True, help="JSONL with 'id' and 'ref' per line")
    t.add_argument("--mode", choices=[m.value for m in Mode], default="CASLS")
    t.add_argument("--T", type=_unit_interval("--T", False), default=DEFAULT_T)
    t.add_argument("--alpha-prime", type=_unit_interval("--alpha-prime", True), default=DEFAULT_ALPHA_PRIME)
    t.add_argument("--no-adaptive", dest="adaptive", action="store_false")
    t.add_argument("--normalization", choices=[n.value for n in Normalization], default="Renormalized")
    k_flag(t)
    t.add_argument("--out", help="targets JSONL (default: stdout)")

    e = sub.add_parser("evaluate", help="calibration report for a prediction log")
    e.add_argument("--in", dest="input", required=True, metavar="LOG")
    e.add_argument("--bins", type=_positive_int("--bins"), default=DEFAULT_BINS)
    k_flag(e)
    e.add_argument("--svg", help="also write a reliability diagram")
    e.add_argument("--out", help="report JSON (default: stdout)")

    f = sub.add_parser("fit-temperature", help="fit a temperature on a full-mode log")
    f.add_argument("--in", dest="input", required=True, metavar="LOG")
    k_flag(f)
    f.add_argument("--out", help="result JSON (default: stdout)")

    r = sub.add_parser("synth-run", help="run the synthetic calibration experiment")
    r.add_argument("--spec", help="task spec JSON (default: built-in spec)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, help=f"RNG seed (else spec, else ${SEED_ENV}, else 0)")
    return p


def _infer_alphabet(records: Sequence[PredictionRecord], K: int | None) -> Alphabet:
    if K is not None:
        return Alphabet(K)
    k = 2
    for r in records:
        if r.dists:
            k = max(k, len(r.dists[0]) - 2)
        k = max(k, max(r.reference, default=-1) + 1, max(r.predicted, default=-1) + 1)
    return Alphabet(k)


def _load_log(path: str, K: int | None) -> tuple[list[PredictionRecord], Alphabet]:
    records = read_jsonl(path)
    if not records:
        raise EmptyInput(f"{path}: no records")
    alphabet = _infer_alphabet(records, K)
    for r in records:
        validate_record(r, alphabet)
    return records, alphabet


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_stats(args) -> None:
    loaded = [_load_log(p, args.K) for p in args.inputs]
    k_total = max(a.size for _, a in loaded)
    alphabet = Alphabet.from_size(k_total)
    total = ContextConfusionStats(k_total)
    for records, _ in loaded:  # one shard per input file
        shard = ContextConfusionStats(k_total)
        for r in records:
            validate_record(r, alphabet)
            shard.accumulate(align(r.reference, r.predicted, alphabet))
        total = merge(total, shard)
    _emit(total.dumps() + "\n", args.out)
    sets = error_prone_sets(total, args.T)
    print(
        f"positions={total.total()} contexts={len(total.contexts)} "
        f"error_prone(T={args.T})={sorted(sets.global_set)}",
        file=sys.stderr,
    )


def _read_refs(path: str) -> list[tuple[str, list[int]]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rid, ref = obj["id"], obj["ref"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise FormatError(f"{path}:{lineno}: expected an object with 'id' and 'ref'") from None
            if not isinstance(ref, list) or not all(isinstance(c, int) for c in ref):
                raise FormatError(f"{path}:{lineno}: 'ref' must be a list of integers")
            out.append((str(rid), ref))
    return out


def cmd_targets(args) -> None:
    cfg = SmoothingConfig(
        mode=Mode(args.mode),
        alpha_prime=args.alpha_prime,
        T=args.T,
        adaptive=args.adaptive,
        normalization=Normalization(args.normalization),
    )
    stats = None
    if args.stats:
        try:
            stats = ContextConfusionStats.from_json(json.loads(Path(args.stats).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.stats}: invalid JSON ({exc.msg})") from None
    elif cfg.mode is not Mode.LS:
        raise UsageError(f"--stats is required for --mode {cfg.mode.value}")
    refs = _read_refs(args.refs)
    if stats is not None:
        alphabet = Alphabet.from_size(stats.k_total)
        if args.K is not None and args.K != alphabet.K:
            raise DomainError(f"--K {args.K} disagrees with stats K_total {stats.k_total}")
    else:
        alphabet = Alphabet(args.K) if args.K else Alphabet(max(2, 1 + max((max(r, default=0) for _, r in refs), default=0)))
    sets = error_prone_sets(stats, cfg.T) if stats is not None else None
    lines = []
    for rid, ref in refs:
        Q = sequence_targets(ref, cfg, alphabet, stats, sets)
        lines.append(_json.dumps({"id": rid, "targets": Q.tolist()}, indent=None))
    _emit("".join(line + "\n" for line in lines), args.out)


def cmd_evaluate(args) -> None:
    records, _ = _load_log(args.input, args.K)
    rep = evaluate(records, args.bins)
    _emit(_json.dumps(report_json(rep)) + "\n", args.out)
    if args.svg:
        write_svg(rep, args.svg, title=Path(args.input).name)


def cmd_fit_temperature(args) -> None:
    records, alphabet = _load_log(args.input, args.K)
    tau = fit_temperature(records, alphabet)
    out = {
        "temperature": tau.value,
        "nll_before": temperature_nll(records, alphabet, 1.0),
        "nll_after": temperature_nll(records, alphabet, tau.value),
    }
    _emit(_json.dumps(out) + "\n", args.out)


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def cmd_synth_run(args) -> None:
    from dataclasses import replace

    if args.spec:
        spec, proto, spec_seed = load_spec(args.spec)
    else:
        spec, proto, spec_seed = default_spec(), {}, None
    seed = args.seed if args.seed is not None else spec_seed if spec_seed is not None else _env_seed()
    spec = replace(spec, seed=int(seed))
    result = run_experiment(spec, Protocol.from_json(proto))
    write_outputs(result, args.out)
    sys.stdout.write(result.summary_csv())
    print(f"synth-run finished in {result.seconds:.1f}s", file=sys.stderr)


COMMANDS = {
    "stats": cmd_stats,
    "targets": cmd_targets,
    "evaluate": cmd_evaluate,
    "fit-temperature": cmd_fit_temperature,
    "synth-run": cmd_synth_run,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
