import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcal.alphabet import Alphabet, make_record, validate_record
from seqcal.errors import DomainError, NeedsFullMode
from seqcal.smoothing import softmax
from seqcal.temperature import (
    Temperature,
    apply_temperature,
    fit_temperature,
    golden_section,
    rescale_record,
    temperature_nll,
)

AB = Alphabet(8)


def synthetic_log(scale: float, n: int = 4000, seed: int = 0, seq_len: int = 3):
    """Labels drawn from softmax(z); stored distributions are softmax(scale * z)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        z = rng.normal(scale=1.5, size=(seq_len, AB.K))
        p_true = softmax(z)
        ref = [int(rng.choice(AB.K, p=row)) for row in p_true]
        stored = np.zeros((seq_len, AB.size))
        stored[:, : AB.K] = softmax(scale * z)
        pred = stored.argmax(1)
        out.append(make_record(str(i), ref, pred, dists=stored))
    return out


class TestApply:
    def test_identity(self):
        z = np.array([[1.0, 2.0, -1.0], [0.0, 0.0, 3.0]])
        assert np.allclose(apply_temperature(z, 1.0), softmax(z), atol=1e-15)

    def test_large_tau_uniform(self):
        assert np.allclose(apply_temperature(np.array([[2.0, 0.0]]), 1e6), [[0.5, 0.5]], atol=1e-6)

    @given(st.integers(0, 2**31 - 1), st.floats(0.01, 100))
    @settings(max_examples=50)
    def test_argmax_invariant(self, seed, tau):
        z = np.random.default_rng(seed).normal(size=(5, 7)) * 3
        assert np.array_equal(apply_temperature(z, tau).argmax(1), z.argmax(1))

    @pytest.mark.parametrize("tau", [0.0, -1.0])
    def test_domain(self, tau):
        with pytest.raises(DomainError):
            apply_temperature(np.zeros((1, 2)), tau)
        with pytest.raises(DomainError):
            Temperature(tau)


class TestFit:
    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_recovers_scale(self, s):
        tau = fit_temperature(synthetic_log(s, n=2000), AB).value
        assert abs(tau - s) < (0.05 if s == 1.0 else 0.1)

    def test_minimizer_dominates_grid(self):
        log = synthetic_log(1.7, n=600, seed=3)
        tau = fit_temperature(log, AB).value
        best = temperature_nll(log, AB, tau)
        assert best <= temperature_nll(log, AB, 1.0)
        for t in np.geomspace(0.05, 20, 60):
            assert best <= temperature_nll(log, AB, t) + 1e-9

    def test_scalar_mode_rejected(self):
        with pytest.raises(NeedsFullMode):
            fit_temperature([make_record("a", [1], [1], conf=[0.9])], AB)

    def test_uses_aligned_positions_only(self):
        # An extra predicted token (insertion) must not contribute a term.
        d = np.zeros(AB.size)
        d[:AB.K] = 1.0 / AB.K
        d[1] += 0.1
        d /= d.sum()
        r = make_record("a", [1], [1, 1], dists=[d, d])
        r1 = make_record("a", [1], [1], dists=[d])
        assert temperature_nll([r], AB, 2.0) == pytest.approx(temperature_nll([r1], AB, 2.0))

    def test_golden_section_quadratic(self):
        assert golden_section(lambda x: (x - 3.21) ** 2, 0.05, 20) == pytest.approx(3.21, abs=1e-4)


class TestRescale:
    def test_predictions_unchanged_and_valid(self):
        for r in synthetic_log(2.0, n=50, seed=1):
            for tau in (0.3, 2.0, 15.0):
                out = rescale_record(r, tau)
                assert out.predicted == r.predicted
                assert tuple(out.dist_array().argmax(1)) == r.predicted
                validate_record(out, AB)

    def test_identity(self):
        r = synthetic_log(1.0, n=1)[0]
        assert np.allclose(rescale_record(r, 1.0).dist_array(), r.dist_array(), atol=1e-12)
