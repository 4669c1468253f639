import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcal.alignment import Op, align, edit_distance
from seqcal.alphabet import Alphabet
from seqcal.errors import BlankInInput

from oracles import levenshtein

AB = Alphabet(8)
BL = AB.blank
c, a, t = 2, 0, 7

seqs = st.lists(st.integers(0, 7), max_size=12)


def strip(seq):
    return tuple(x for x in seq if x != BL)


class TestExamples:
    def test_redundant_token(self):
        p = align([c, a, t], [c, a, a, t], AB)
        assert p.ref_aligned == (c, a, BL, t)
        assert p.pred_aligned == (c, a, a, t)
        assert p.ops == (Op.MATCH, Op.MATCH, Op.INSERT, Op.MATCH)

    def test_omitted_token(self):
        p = align([c, a, t], [c, t], AB)
        assert p.ref_aligned == (c, a, t)
        assert p.pred_aligned == (c, BL, t)
        assert p.ops == (Op.MATCH, Op.DELETE, Op.MATCH)

    def test_identity(self):
        p = align([0, 1], [0, 1], AB)
        assert p.ref_aligned == p.pred_aligned == (0, 1)
        assert p.ops == (Op.MATCH, Op.MATCH)

    def test_substitution_is_one_position(self):
        p = align([1, 2, 3], [1, 5, 3], AB)
        assert p.ops == (Op.MATCH, Op.SUBSTITUTE, Op.MATCH)

    def test_empty_prediction(self):
        p = align([1, 2], [], AB)
        assert p.pred_aligned == (BL, BL)
        assert p.ops == (Op.DELETE, Op.DELETE)

    @pytest.mark.parametrize("ref,pred", [([AB.blank], [1]), ([1], [AB.sos]), ([1], [99]), ([-1], [1])])
    def test_reserved_classes_rejected(self, ref, pred):
        with pytest.raises(BlankInInput):
            align(ref, pred, AB)


class TestEditDistance:
    def test_values(self):
        assert edit_distance([0, 1, 2], [0, 1, 2]) == 0
        assert edit_distance([0, 1, 2], []) == 3
        assert edit_distance([c, a, t], [c, a, a, t]) == levenshtein([c, a, t], [c, a, a, t]) == 1

    @given(seqs, seqs)
    def test_symmetric(self, x, y):
        assert edit_distance(x, y) == edit_distance(y, x)

    @given(seqs, seqs, seqs)
    @settings(max_examples=60)
    def test_triangle(self, x, y, z):
        assert edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z)

    @given(seqs, seqs)
    def test_matches_oracle(self, x, y):
        assert edit_distance(x, y) == levenshtein(x, y)


class TestAlignmentProperties:
    @given(seqs, seqs)
    def test_invariants(self, x, y):
        p = align(x, y, AB)
        assert len(p.ref_aligned) == len(p.pred_aligned) == len(p.ops)
        assert strip(p.ref_aligned) == tuple(x)
        assert strip(p.pred_aligned) == tuple(y)
        assert all(not (r == BL and q == BL) for r, q in zip(p.ref_aligned, p.pred_aligned))
        assert p.distance == levenshtein(x, y)

    @given(seqs, seqs)
    def test_ops_consistent_with_columns(self, x, y):
        p = align(x, y, AB)
        for r, q, op in zip(p.ref_aligned, p.pred_aligned, p.ops):
            if op is Op.INSERT:
                assert r == BL and q != BL
            elif op is Op.DELETE:
                assert q == BL and r != BL
            elif op is Op.MATCH:
                assert r == q != BL
            else:
                assert r != q and BL not in (r, q)

    @given(seqs)
    def test_self_alignment_all_match(self, x):
        assert set(align(x, x, AB).ops) <= {Op.MATCH}

    @given(seqs, seqs)
    @settings(max_examples=30)
    def test_deterministic(self, x, y):
        assert align(x, y, AB) == align(x, y, AB)
