import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqcal.alphabet import (
    Alphabet,
    make_record,
    parse_jsonl,
    read_jsonl,
    record_from_json,
    record_to_json,
    validate_record,
    write_jsonl,
)
from seqcal.errors import (
    ArgmaxMismatch,
    FormatError,
    IndexOutOfRange,
    LengthMismatch,
    NotADistribution,
    UsageError,
)

AB = Alphabet(6)


def peaked(c, k_total=8, top=0.6):
    d = np.full(k_total, (1 - top) / (k_total - 1))
    d[c] = top
    return d


class TestAlphabet:
    def test_reserved_indices(self):
        assert (AB.blank, AB.sos, AB.size) == (6, 7, 8)
        assert not AB.is_ordinary(AB.blank) and not AB.is_ordinary(AB.sos)
        assert AB.name(AB.blank) == "<blank>"

    def test_too_small(self):
        with pytest.raises(UsageError):
            Alphabet(1)

    def test_names(self):
        ab = Alphabet(2, ("x", "y"))
        assert ab.name(1) == "y"
        with pytest.raises(UsageError):
            Alphabet(2, ("x",))


class TestValidate:
    def test_full_mode_ok(self):
        r = make_record("a", [2, 5], [2, 5], dists=[peaked(2), peaked(5)])
        assert validate_record(r, AB) is r

    def test_bad_sum(self):
        d = peaked(2) * 0.8
        with pytest.raises(NotADistribution):
            validate_record(make_record("a", [2], [2], dists=[d]), AB)

    def test_negative_entry(self):
        d = peaked(2)
        d[0], d[1] = -0.01, d[1] + 0.01
        with pytest.raises(NotADistribution):
            validate_record(make_record("a", [2], [2], dists=[d]), AB)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            validate_record(make_record("a", [2], [2], dists=[peaked(2), peaked(2)]), AB)
        with pytest.raises(LengthMismatch):
            validate_record(make_record("a", [2], [2, 3], conf=[0.5]), AB)

    def test_argmax_mismatch(self):
        with pytest.raises(ArgmaxMismatch):
            validate_record(make_record("a", [2], [3], dists=[peaked(2)]), AB)

    @pytest.mark.parametrize("ref,pred", [([6], [1]), ([1], [7]), ([1], [8]), ([-1], [1])])
    def test_class_range(self, ref, pred):
        with pytest.raises(IndexOutOfRange):
            validate_record(make_record("a", ref, pred, conf=[0.5]), AB)

    @pytest.mark.parametrize("p", [0.0, 1.5, -0.2, float("nan")])
    def test_scalar_confidence_range(self, p):
        with pytest.raises(NotADistribution):
            validate_record(make_record("a", [1], [1], conf=[p]), AB)

    def test_empty_reference(self):
        with pytest.raises(LengthMismatch):
            validate_record(make_record("a", [], [], conf=[]), AB)

    def test_empty_prediction_ok(self):
        validate_record(make_record("a", [1, 2], []), AB)

    def test_idempotent(self):
        r = make_record("a", [1, 2], [1, 2], conf=[0.9, 1.0])
        assert validate_record(validate_record(r, AB), AB) == r


ids = st.lists(st.integers(0, 5), min_size=1, max_size=6)


@st.composite
def records(draw):
    ref = draw(ids)
    pred = draw(st.lists(st.integers(0, 5), max_size=6))
    if draw(st.booleans()):
        conf = draw(st.lists(st.floats(0.01, 1.0), min_size=len(pred), max_size=len(pred)))
        return make_record(draw(st.text(max_size=5)), ref, pred, conf=conf)
    rows = [peaked(c, top=draw(st.floats(0.2, 1.0))) for c in pred]
    return make_record(draw(st.text(max_size=5)), ref, pred, dists=rows if rows else np.zeros((0, 8)))


class TestWireFormat:
    @given(records())
    def test_round_trip(self, r):
        validate_record(r, AB)
        line = json.dumps(record_to_json(r))
        back = record_from_json(json.loads(line))
        assert back == r
        validate_record(back, AB)

    def test_unknown_fields_ignored_and_order_free(self):
        r = record_from_json(json.loads('{"conf": [0.5], "extra": 1, "pred": [1], "ref": [1], "id": "x"}'))
        assert r == make_record("x", [1], [1], conf=[0.5])

    def test_file_round_trip(self, tmp_path):
        rs = [make_record("a", [1], [1], conf=[0.5]), make_record("b", [2, 3], [2], dists=[peaked(2)])]
        p = tmp_path / "log.jsonl"
        write_jsonl(rs, p)
        assert read_jsonl(p) == rs

    @pytest.mark.parametrize(
        "line",
        [
            "not json",
            '{"id": 3, "ref": [1], "pred": [], "conf": []}',
            '{"id": "a", "ref": [1.5], "pred": [], "conf": []}',
            '{"id": "a", "ref": [1], "pred": [1]}',
            '{"id": "a", "ref": [1], "pred": [1], "conf": ["x"]}',
            "[1, 2]",
        ],
    )
    def test_malformed(self, line):
        with pytest.raises(FormatError):
            list(parse_jsonl([line]))

    def test_error_carries_line_number(self):
        with pytest.raises(FormatError, match=":2:"):
            list(parse_jsonl(['{"id": "a", "ref": [1], "pred": [], "conf": []}', "oops"], "log"))
