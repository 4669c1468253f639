
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcal.alphabet import make_record
from seqcal.errors import DomainError, EmptyInput, EmptyPrediction
from seqcal.metrics import (
    bin_index,
    brier_score,
    ece,
    ece_from_bins,
    evaluate,
    sequence_confidence,
    wer,
)

from oracles import levenshtein


def rec(correct: bool, conf: float, rid="r"):
    ref = (1, 2)
    pred = ref if correct else (1, 3)
    return make_record(rid, ref, pred, conf=[conf, 1.0])


TWO = [rec(True, 0.9, "a"), rec(False, 0.8, "b")]


class TestSequenceConfidence:
    def test_product(self):
        r = make_record("x", [1, 2, 3], [1, 2, 3], conf=[0.9, 0.8, 0.5])
        assert sequence_confidence(r) == pytest.approx(0.36, abs=1e-15)

    def test_single_and_certain(self):
        assert sequence_confidence(make_record("x", [1], [1], conf=[0.7])) == 0.7
        assert sequence_confidence(make_record("x", [1, 1], [1, 1], conf=[1.0, 1.0])) == 1.0

    def test_full_mode_reads_chosen_entry(self):
        r = make_record("x", [0], [1], dists=[[0.2, 0.5, 0.3, 0.0]])
        assert sequence_confidence(r) == 0.5

    def test_empty(self):
        with pytest.raises(EmptyPrediction):
            sequence_confidence(make_record("x", [1], []))


class TestBrier:
    def test_values(self):
        assert brier_score([rec(True, 1.0)]) == 0.0
        assert brier_score(TWO) == pytest.approx(0.325, abs=1e-15)
        assert brier_score([rec(False, 1.0)]) == 1.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            brier_score([])

    def test_empty_prediction_is_wrong_at_zero(self):
        assert brier_score([make_record("x", [1], [])]) == 0.0


class TestECE:
    def test_single_bin(self):
        e, bins = ece(TWO, 1)
        assert (bins[0].accuracy, bins[0].count) == (0.5, 2)
        assert bins[0].confidence == pytest.approx(0.85, abs=1e-15)
        assert e == pytest.approx(0.35, abs=1e-15)

    def test_perfect(self):
        for M in (1, 7, 15):
            assert ece([rec(True, 1.0)] * 3, M)[0] == 0.0

    def test_boundaries_m15(self):
        idx = bin_index(np.array([0.85, 0.95, 0.0, 1.0, 1 / 15, 2 / 15]), 15)
        assert list(idx) == [12, 14, 0, 14, 0, 1]
        _, bins = ece([rec(True, 0.85), rec(True, 0.95)], 15)
        assert bins[12].count == 1 and bins[14].count == 1
        assert bins[12].lower == pytest.approx(0.8) and bins[12].upper == pytest.approx(13 / 15)

    @pytest.mark.parametrize("M", [1, 2, 3, 5, 10, 15, 20, 100])
    def test_exact_bin_edges(self, M):
        edges = np.arange(1, M + 1) / M
        assert list(bin_index(edges, M)) == list(range(M))

    def test_bad_m(self):
        with pytest.raises(DomainError):
            ece(TWO, 0)


class TestWER:
    def test_values(self):
        assert wer(TWO[:1]) == 0.0
        r = make_record("x", [1, 2, 3, 4], [1, 2, 0, 4], conf=[1, 1, 1, 1])
        assert wer([r]) == 0.25
        assert wer([make_record("x", [1, 2, 3], [])]) == 1.0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            wer([])


class TestEvaluate:
    def test_singleton(self):
        rep = evaluate([rec(True, 1.0)])
        assert (rep.sequence_accuracy, rep.brier, rep.ece, rep.wer) == (1.0, 0.0, 0.0, 0.0)

    def test_two_record(self):
        rep = evaluate(TWO, 1)
        assert rep.sequence_accuracy == 0.5
        assert rep.brier == pytest.approx(0.325, abs=1e-15)
        assert rep.ece == pytest.approx(0.35, abs=1e-15)
        assert rep.wer == 0.25

    def test_to_dict(self):
        d = evaluate(TWO, 3).to_dict()
        assert len(d["bins"]) == 3 and d["n"] == 2


@st.composite
def record_sets(draw):
    n = draw(st.integers(1, 40))
    out = []
    for i in range(n):
        ref = draw(st.lists(st.integers(0, 4), min_size=1, max_size=5))
        kind = draw(st.integers(0, 5))
        if kind == 0:
            out.append(make_record(str(i), ref, []))
            continue
        pred = ref if kind > 2 else draw(st.lists(st.integers(0, 4), min_size=1, max_size=5))
        conf = draw(st.lists(st.floats(0.05, 1.0), min_size=len(pred), max_size=len(pred)))
        out.append(make_record(str(i), ref, pred, conf=conf))
    return out


class TestProperties:
    @given(record_sets(), st.integers(1, 30))
    @settings(max_examples=80)
    def test_ranges_and_bins(self, rs, M):
        rep = evaluate(rs, M)
        assert 0 <= rep.ece <= 1 and 0 <= rep.brier <= 1
        assert sum(b.count for b in rep.bins) == len(rs)
        assert abs(ece_from_bins(rep.bins) - rep.ece) < 1e-12
        for b in rep.bins:
            if b.count:
                assert b.lower - 1e-12 <= b.confidence <= b.upper + 1e-12 or (b.lower == 0 and b.confidence == 0)

    @given(record_sets())
    @settings(max_examples=80)
    def test_single_bin_identity(self, rs):
        rep = evaluate(rs, 1)
        assert rep.ece == abs(rep.sequence_accuracy - rep.mean_confidence)

    @given(record_sets(), st.randoms(use_true_random=False))
    @settings(max_examples=50)
    def test_permutation_invariance(self, rs, rnd):
        shuffled = list(rs)
        rnd.shuffle(shuffled)
        assert evaluate(rs, 15) == evaluate(shuffled, 15)

    @given(record_sets())
    @settings(max_examples=50)
    def test_wer_oracle(self, rs):
        num = sum(levenshtein(r.reference, r.predicted) for r in rs)
        assert wer(rs) == num / sum(len(r.reference) for r in rs)
