"""Deterministic desk-scale sequence-recognition task and a tiny context model.

References follow a first-order Markov chain.  Each reference token is rendered
as a glyph: its observed *shape* (the reference class, possibly swapped for a
look-alike according to context-dependent confusability rules), the class it
was written after, and, for shapes that are confusable in that context, the
writer's style.  Style-dependent glyphs are rare enough that a flexible model
memorizes them, which is what makes the trained model over-confident exactly
where the confusions happen.

The model scores ``W_obs[glyph] + W_prev[previous token] + b`` and decodes
greedily, feeding back its own previous prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .alphabet import Alphabet, PredictionRecord, make_record
from .errors import DomainError, MissingStats, SpecInvalid
from .smoothing import Mode, SmoothingConfig, sequence_targets

TRANSITION_TOL = 1e-9


@dataclass(frozen=True)
class Corruption:
    """Observed-shape distribution for reference ``cls`` written after ``context``.

    ``context`` is an ordinary class or the alphabet's SOS id (first position).
    """

    context: int
    cls: int
    observed: tuple[float, ...]

    @classmethod
    def swap(cls, context: int, a: int, b: int, rate: float, K: int) -> tuple["Corruption", "Corruption"]:
        """Symmetric look-alike pair: each of ``a``/``b`` renders as the other with ``rate``."""
        out = []
        for src, dst in ((a, b), (b, a)):
            p = np.zeros(K)
            p[src] = 1.0 - rate
            p[dst] += rate
            out.append(cls(context, src, tuple(p)))
        return tuple(out)


@dataclass(frozen=True)
class SynthTaskSpec:
    K: int
    transition: tuple[tuple[float, ...], ...]
    initial: tuple[float, ...]
    confusability: tuple[Corruption, ...] = ()
    length_range: tuple[int, int] = (3, 7)
    n_train: int = 5000
    n_support: int = 2000
    n_test: int = 3000
    styles: int = 1
    seed: int = 0

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.K)

    def validate(self) -> "SynthTaskSpec":
        K = self.K
        if K < 2:
            raise SpecInvalid(f"K must be >= 2, got {K}")
        T = np.asarray(self.transition, dtype=float)
        if T.shape != (K, K):
            raise SpecInvalid(f"transition must be {K}x{K}, got shape {T.shape}")
        if (T < 0).any() or np.abs(T.sum(1) - 1).max() > TRANSITION_TOL:
            raise SpecInvalid("transition rows must be non-negative and sum to 1")
        p0 = np.asarray(self.initial, dtype=float)
        if p0.shape != (K,) or (p0 < 0).any() or abs(p0.sum() - 1) > TRANSITION_TOL:
            raise SpecInvalid("initial distribution must have K non-negative entries summing to 1")
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise SpecInvalid(f"invalid length range {self.length_range}")
        if min(self.n_train, self.n_support, self.n_test) < 1:
            raise SpecInvalid("sample counts must be positive")
        if self.styles < 1:
            raise SpecInvalid("styles must be >= 1")
        seen = set()
        sos = self.alphabet.sos
        for r in self.confusability:
            if not (0 <= r.context < K or r.context == sos) or not 0 <= r.cls < K:
                raise SpecInvalid(f"corruption rule index out of range: {r}")
            p = np.asarray(r.observed, dtype=float)
            if p.shape != (K,) or (p < 0).any() or abs(p.sum() - 1) > TRANSITION_TOL:
                raise SpecInvalid(f"corruption distribution for context {r.context}, class {r.cls} is not a distribution")
            if (r.context, r.cls) in seen:
                raise SpecInvalid(f"duplicate corruption rule for context {r.context}, class {r.cls}")
            seen.add((r.context, r.cls))
        return self

    # Context rows are indexed 0..K with K standing for the sequence start.
    def _ctx(self, c: int) -> int:
        return self.K if c == self.alphabet.sos else c

    def corruption_cdf(self) -> np.ndarray:
        K = self.K
        P = np.broadcast_to(np.eye(K), (K + 1, K, K)).copy()
        for r in self.confusability:
            P[self._ctx(r.context), r.cls] = r.observed
        return np.cumsum(P, axis=2)

    def volatile(self) -> np.ndarray:
        """``[ctx, shape]`` cells whose glyph depends on writer style."""
        V = np.zeros((self.K + 1, self.K), dtype=bool)
        for r in self.confusability:
            V[self._ctx(r.context)] |= np.asarray(r.observed) > 0
        return V

    # --- JSON ----------------------------------------------------------------

    def to_json(self) -> dict:
        sos = self.alphabet.sos
        return {
            "K": self.K,
            "transition": [list(r) for r in self.transition],
            "initial": list(self.initial),
            "confusability": [
                {"context": "sos" if r.context == sos else r.context, "class": r.cls, "observed": list(r.observed)}
                for r in self.confusability
            ],
            "length_range": list(self.length_range),
            "n_train": self.n_train,
            "n_support": self.n_support,
            "n_test": self.n_test,
            "styles": self.styles,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: Mapping, base: "SynthTaskSpec | None" = None) -> "SynthTaskSpec":
        """Build a spec; keys missing from ``obj`` are taken from ``base`` (default spec)."""
        base = base if base is not None else default_spec()
        known = {"K", "transition", "initial", "confusability", "length_range",
                 "n_train", "n_support", "n_test", "styles", "seed", "protocol"}
        unknown = set(obj) - known
        if unknown:
            raise SpecInvalid(f"unknown spec keys: {sorted(unknown)}")
        try:
            K = int(obj.get("K", base.K))
            if K != base.K and ("transition" not in obj or "initial" not in obj):
                raise SpecInvalid("changing K requires explicit transition and initial")
            sos = K + 1
            rules = base.confusability if K == base.K else ()
            if "confusability" in obj:
                rules = tuple(
                    Corruption(
                        sos if r["context"] == "sos" else int(r["context"]),
                        int(r["class"]),
                        tuple(float(x) for x in r["observed"]),
                    )
                    for r in obj["confusability"]
                )
            spec = cls(
                K=K,
                transition=tuple(tuple(float(x) for x in row) for row in obj.get("transition", base.transition)),
                initial=tuple(float(x) for x in obj.get("initial", base.initial)),
                confusability=rules,
                length_range=tuple(int(x) for x in obj.get("length_range", base.length_range)),
                n_train=int(obj.get("n_train", base.n_train)),
                n_support=int(obj.get("n_support", base.n_support)),
                n_test=int(obj.get("n_test", base.n_test)),
                styles=int(obj.get("styles", base.styles)),
                seed=int(obj.get("seed", base.seed)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecInvalid):
                raise
            raise SpecInvalid(f"malformed spec: {exc!r}") from None
        return spec.validate()


# Designed look-alike pairs: (context, a, b, concentrated).  Each pair is
# confusable only after its context class, and that context sends most of its
# mass to a or b.  Classes of a concentrated pair are rare elsewhere, so their
# global error rate is high; the others stay diluted below the threshold.
DEFAULT_PAIRS = ((0, 2, 3, True), (9, 4, 5, False), (6, 7, 8, False))
DEFAULT_PAIR_RATE = 0.3
DEFAULT_STYLES = 100
DEFAULT_TO_PAIR = 0.6
DEFAULT_RARE = 0.15


def default_spec(
    seed: int = 0,
    pair_rate: float = DEFAULT_PAIR_RATE,
    styles: int = DEFAULT_STYLES,
    to_pair: float = DEFAULT_TO_PAIR,
    rare: float = DEFAULT_RARE,
) -> SynthTaskSpec:
    K = 10
    # row K of the base draw is the initial distribution
    rows = np.random.default_rng(12345).dirichlet(np.full(K, 2.0), size=K + 1)
    conc = [c for _, a, b, flag in DEFAULT_PAIRS if flag for c in (a, b)]
    rows[:, conc] *= rare
    rows /= rows.sum(1, keepdims=True)
    rules: list[Corruption] = []
    for k, a, b, _ in DEFAULT_PAIRS:
        rows[k] *= 1 - to_pair
        rows[k, a] += to_pair / 2
        rows[k, b] += to_pair / 2
        rules.extend(Corruption.swap(k, a, b, pair_rate, K))
    return SynthTaskSpec(
        K=K,
        transition=tuple(map(tuple, rows[:K])),
        initial=tuple(rows[K]),
        confusability=tuple(rules),
        styles=styles,
        seed=seed,
    ).validate()


def load_spec(path: str | Path) -> tuple[SynthTaskSpec, dict, int | None]:
    """Read a spec file.

    Returns the spec, its optional ``protocol`` block, and the seed given in
    the file (``None`` when the file leaves it to the caller).
    """
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecInvalid(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise SpecInvalid(f"{path}: spec must be a JSON object")
    seed = obj.get("seed")
    return SynthTaskSpec.from_json(obj), dict(obj.get("protocol", {})), None if seed is None else int(seed)


# --- data --------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Padded arrays; ``refs``/``shapes`` hold -1 past each sequence's length."""

    name: str
    refs: np.ndarray
    shapes: np.ndarray
    lengths: np.ndarray
    styles: np.ndarray

    def __len__(self) -> int:
        return len(self.lengths)

    def reference(self, n: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.refs[n, : self.lengths[n]])

    def shape_seq(self, n: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.shapes[n, : self.lengths[n]])

    def references(self) -> list[tuple[int, ...]]:
        return [self.reference(n) for n in range(len(self))]


def _sample(spec: SynthTaskSpec, n: int, rng: np.random.Generator, cdf: np.ndarray, name: str) -> Dataset:
    K = spec.K
    lo, hi = spec.length_range
    trans = np.vstack([np.asarray(spec.transition), np.asarray(spec.initial)])
    tcdf = np.cumsum(trans, axis=1)
    Ls = rng.integers(lo, hi + 1, size=n)
    styles = rng.integers(0, spec.styles, size=n)
    R = np.full((n, hi), -1, dtype=np.int64)
    O = np.full((n, hi), -1, dtype=np.int64)
    ctx = np.full(n, K)
    for t in range(hi):
        active = t < Ls
        u = rng.random(n)
        y = np.minimum((u[:, None] > tcdf[ctx]).sum(1), K - 1)
        v = rng.random(n)
        o = np.minimum((v[:, None] > cdf[ctx, y]).sum(1), K - 1)
        R[active, t] = y[active]
        O[active, t] = o[active]
        ctx = np.where(active, y, ctx)
    return Dataset(name, R, O, Ls, styles)


def generate(spec: SynthTaskSpec) -> tuple[Dataset, Dataset, Dataset]:
    """(train, support, test) drawn in that order from one seeded stream."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cdf = spec.corruption_cdf()
    return (
        _sample(spec, spec.n_train, rng, cdf, "train"),
        _sample(spec, spec.n_support, rng, cdf, "support"),
        _sample(spec, spec.n_test, rng, cdf, "test"),
    )


# --- model -------------------------------------------------------------------


class GlyphIndexer:
    """Maps (shape, rendering context, style) to a dense glyph id."""

    def __init__(self, spec: SynthTaskSpec):
        self.K = spec.K
        self.S = spec.styles
        self.volatile = spec.volatile()
        self.size = self.K * (self.K + 1) * self.S

    def __call__(self, shape, ctx, style):
        shape, ctx, style = np.broadcast_arrays(np.asarray(shape), np.asarray(ctx), np.asarray(style))
        s = np.where(self.volatile[ctx, shape], style, 0)
        return (shape * (self.K + 1) + ctx) * self.S + s


@dataclass
class ToyModel:
    W_obs: np.ndarray
    W_prev: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros(cls, n_glyphs: int, k_total: int) -> "ToyModel":
        return cls(np.zeros((n_glyphs, k_total)), np.zeros((k_total, k_total)), np.zeros(k_total))

    def copy(self) -> "ToyModel":
        return ToyModel(self.W_obs.copy(), self.W_prev.copy(), self.b.copy())

    def logits(self, glyph: np.ndarray, prev: np.ndarray) -> np.ndarray:
        return self.W_obs[glyph] + self.W_prev[prev] + self.b

    def is_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in (self.W_obs, self.W_prev, self.b))


@dataclass(frozen=True)
class TokenBatch:
    """Teacher-forced token view of a dataset: one row per reference position."""

    glyph: np.ndarray
    prev: np.ndarray
    y: np.ndarray
    seq: np.ndarray  # owning sequence of each token


def token_batch(ds: Dataset, indexer: GlyphIndexer, alphabet: Alphabet) -> TokenBatch:
    n, Lmax = ds.refs.shape
    K = alphabet.K
    ctx = np.concatenate([np.full((n, 1), K), np.where(ds.refs[:, :-1] < 0, 0, ds.refs[:, :-1])], axis=1)
    mask = ds.refs >= 0
    prev = np.concatenate([np.full((n, 1), alphabet.sos), ds.refs[:, :-1]], axis=1)
    sty = np.broadcast_to(ds.styles[:, None], ds.refs.shape)
    glyph = indexer(np.where(mask, ds.shapes, 0), ctx, sty)
    seq = np.broadcast_to(np.arange(n)[:, None], ds.refs.shape)
    return TokenBatch(glyph[mask], prev[mask], ds.refs[mask], seq[mask])


def _segment_sum(idx: np.ndarray, G: np.ndarray, n_rows: int) -> np.ndarray:
    """Row sums of ``G`` grouped by ``idx`` (a faster ``np.add.at``)."""
    order = np.argsort(idx, kind="stable")
    sidx = idx[order]
    starts = np.flatnonzero(np.r_[True, sidx[1:] != sidx[:-1]])
    out = np.zeros((n_rows, G.shape[1]))
    out[sidx[starts]] = np.add.reduceat(G[order], starts, axis=0)
    return out


def loss_and_grad(model: ToyModel, batch: TokenBatch, Q: np.ndarray) -> tuple[float, ToyModel]:
    """Token-averaged soft-target cross-entropy and its exact parameter gradient."""
    Z = model.logits(batch.glyph, batch.prev)
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    P = E / E.sum(axis=1, keepdims=True)
    N = len(batch.y)
    loss = -float(np.sum(Q * np.log(np.maximum(P, 1e-300)))) / N
    Gz = (P * Q.sum(axis=1, keepdims=True) - Q) / N
    grad = ToyModel(
        _segment_sum(batch.glyph, Gz, model.W_obs.shape[0]),
        _segment_sum(batch.prev, Gz, model.W_prev.shape[0]),
        Gz.sum(axis=0),
    )
    return loss, grad


def build_targets(
    ds: Dataset,
    alphabet: Alphabet,
    mode: str,
    config: SmoothingConfig | None = None,
    stats=None,
    sets=None,
) -> np.ndarray:
    """Stacked per-token targets in :func:`token_batch` order."""
    mode = mode.upper()
    if mode == "CE":
        return np.eye(alphabet.size)[ds.refs[ds.refs >= 0]]
    if config is None:
        raise DomainError(f"{mode} training needs a smoothing config")
    config = replace(config, mode=Mode(mode))
    if config.mode is not Mode.LS and stats is None:
        raise MissingStats(f"{mode} training needs frozen confusion statistics")
    return np.concatenate([sequence_targets(r, config, alphabet, stats, sets) for r in ds.references()])


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 800
    lr: float = 1.0
    precondition: bool = True


def train(
    model: ToyModel,
    batch: TokenBatch,
    targets: np.ndarray,
    config: TrainConfig = TrainConfig(),
) -> tuple[ToyModel, list[float]]:
    """Full-batch gradient descent from a copy of ``model``.

    With ``precondition`` each feature row's step is scaled by
    ``N / count(feature)``, so rare glyphs move as fast as common ones.
    Returns the trained model and the loss before each step plus the final loss.
    """
    if config.lr < 0 or config.epochs < 0:
        raise DomainError("epochs and learning rate must be non-negative")
    m = model.copy()
    N = len(batch.y)
    if config.precondition:
        s_obs = (N / np.maximum(np.bincount(batch.glyph, minlength=m.W_obs.shape[0]), 1))[:, None]
        s_prev = (N / np.maximum(np.bincount(batch.prev, minlength=m.W_prev.shape[0]), 1))[:, None]
    else:
        s_obs = s_prev = 1.0
    curve = []
    for _ in range(config.epochs):
        loss, g = loss_and_grad(m, batch, targets)
        curve.append(loss)
        m.W_obs -= config.lr * s_obs * g.W_obs
        m.W_prev -= config.lr * s_prev * g.W_prev
        m.b -= config.lr * g.b
    curve.append(loss_and_grad(m, batch, targets)[0])
    return m, curve


def decode(model: ToyModel, ds: Dataset, indexer: GlyphIndexer, alphabet: Alphabet, prefix: str = "") -> list[PredictionRecord]:
    """Greedy decoding of every sequence, feeding back the previous prediction.

    Reserved classes are masked out, so every emitted token is ordinary.
    """
    n, Lmax = ds.refs.shape
    K = alphabet.K
    prev = np.full(n, alphabet.sos)
    ctx = np.full(n, K)
    preds = np.zeros((n, Lmax), dtype=np.int64)
    dists = np.zeros((n, Lmax, alphabet.size))
    for t in range(Lmax):
        active = t < ds.lengths
        shape = np.where(active, ds.shapes[:, t], 0)
        Z = model.logits(indexer(shape, ctx, ds.styles), prev)
        Z[:, K:] = -np.inf
        Z = Z - Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        j = P.argmax(axis=1)
        preds[:, t] = j
        dists[:, t] = P
        prev = np.where(active, j, prev)
        ctx = np.where(active, ds.refs[:, t], ctx)
    return [
        make_record(f"{prefix}{i}", ds.reference(i), preds[i, : ds.lengths[i]], dists=dists[i, : ds.lengths[i]])
        for i in range(n)
    ]
