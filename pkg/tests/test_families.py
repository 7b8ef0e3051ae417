import math

import numpy as np
import pytest

from distributions import (
    ParetoTail,
    TwoPoint,
    UnsupportedFamily,
    VaryingFamily,
    compose_check,
    compose_profile,
    domination_check,
    envelope,
    gut_condition,
    uniform_integrability_gap,
)
from slowly_varying import Normalizer, SlowlyVaryingFn

ONE = SlowlyVaryingFn.constant()
LOG = SlowlyVaryingFn.log()
PARETO_1 = ParetoTail(q=1.0, c=1.0)


class TestVaryingFamily:
    def test_counterexample_member(self):
        fam = VaryingFamily.counterexample(1.0)
        assert fam.member(4) == TwoPoint(v=4.0, mass=0.25)
        assert not fam.identical

    def test_envelope_is_tight(self):
        fam = VaryingFamily.counterexample(1.0)
        for x in (0.5, 3.5, 10.0, 41.2):
            brute = max(float(fam.member(n).tail(x)) for n in range(1, 2000))
            assert envelope(fam, x) == pytest.approx(brute)

    def test_envelope_rejects_negative(self):
        with pytest.raises(ValueError):
            envelope(VaryingFamily.counterexample(), -1.0)

    def test_counterexample_has_no_truncated_drift(self):
        fam = VaryingFamily.counterexample(1.5)
        np.testing.assert_array_equal(fam.truncated_means(10, 3.0), np.zeros(10))

    def test_abs_band_means(self):
        fam = VaryingFamily.counterexample(1.0)
        # atoms i with 2 < i <= 5 contribute i * (1/i)
        np.testing.assert_allclose(fam.abs_band_means(8, 2.0, 5.0), [0, 0, 1, 1, 1, 0, 0, 0])

    def test_descriptor_round_trip(self):
        for fam in (VaryingFamily.counterexample(1.5), VaryingFamily.constant(PARETO_1)):
            assert VaryingFamily.from_descriptor(fam.descriptor()) == fam

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedFamily):
            VaryingFamily(kind="markov")


class TestGutCondition:
    @pytest.mark.parametrize("n", [10, 1000, 10 ** 6, 10 ** 9])
    def test_boundary_is_exactly_one(self, n):
        assert gut_condition(PARETO_1, Normalizer(1.0, ONE), n) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("n", [10, 1000, 10 ** 6, 10 ** 9])
    def test_log_normalizer_gives_inverse_log(self, n):
        assert gut_condition(PARETO_1, Normalizer(1.0, LOG), n) == pytest.approx(1.0 / math.log(n), rel=1e-12)

    def test_log_space_matches(self):
        norm = Normalizer(1.0, LOG)
        assert gut_condition(PARETO_1, norm, log_n=math.log(1e6)) == pytest.approx(gut_condition(PARETO_1, norm, 10 ** 6))
        assert gut_condition(PARETO_1, norm, log_n=5000.0) == pytest.approx(1.0 / 5000.0)

    def test_rejects_bad_index(self):
        with pytest.raises(ValueError):
            gut_condition(PARETO_1, Normalizer(1.0, ONE), 0)


class TestUniformIntegrability:
    @pytest.mark.parametrize("a", [1.0, 10.0, 1000.0])
    def test_counterexample_gap_is_one(self, a):
        assert uniform_integrability_gap(VaryingFamily.counterexample(1.0), 1.0, ONE, a) == 1.0

    def test_counterexample_gap_grows_with_log(self):
        assert math.isinf(uniform_integrability_gap(VaryingFamily.counterexample(1.0), 1.0, LOG, 10.0))

    def test_small_levels_use_regularized_L(self):
        # ramp at 2.72 for log^-1: Y_1 = L1(1) < 0.5 drops out and L1(2) < L(3)
        fam = VaryingFamily.counterexample(1.0)
        gap = uniform_integrability_gap(fam, 1.0, SlowlyVaryingFn.log(-1.0), 0.5)
        assert gap == pytest.approx(1.0 / math.log(3.0))

    def test_constant_pareto_closed_form(self):
        fam = VaryingFamily.constant(ParetoTail(q=1.5))
        assert uniform_integrability_gap(fam, 1.0, ONE, 8.0) == pytest.approx(3.0 / math.sqrt(8.0))

    def test_heavy_tail_not_integrable(self):
        fam = VaryingFamily.constant(ParetoTail(q=0.8))
        assert math.isinf(uniform_integrability_gap(fam, 1.0, ONE, 5.0))

    def test_bounded_law_vanishes(self):
        fam = VaryingFamily.constant(TwoPoint(v=2.0, mass=0.5))
        assert uniform_integrability_gap(fam, 1.0, ONE, 5.0) == 0.0

    def test_rejects_nonpositive_level(self):
        with pytest.raises(ValueError):
            uniform_integrability_gap(VaryingFamily.counterexample(), 1.0, ONE, 0.0)


class TestCompose:
    def test_constant_composes_to_one(self):
        assert compose_check(1.0, SlowlyVaryingFn.constant(3.0), 10 ** 4) == pytest.approx(1.0)

    def test_log_closed_form(self):
        n = 10 ** 6
        ln = math.log(n)
        assert compose_check(1.0, LOG, n) == pytest.approx(1.0 - math.log(ln) / ln)

    def test_profile_threshold(self):
        profile = compose_profile(1.0, LOG, [2.0, 5.0, 10.0, 100.0])
        assert profile.settled
        assert profile.threshold_log_n == 2.0
        assert profile.trend == pytest.approx([abs(r - 1.0) for r in profile.ratios])
        assert profile.trend[-1] < profile.trend[1]

    def test_rejects_p_out_of_range(self):
        with pytest.raises(ValueError):
            compose_check(2.5, LOG, 100)


class TestDomination:
    def test_counterexample_envelope(self):
        rows = domination_check(VaryingFamily.counterexample(1.0), 0.5, [1.0, 10.0, 100.0])
        assert all(row.holds for row in rows)
        assert rows[0].lower_lhs == 1.0
        assert rows[0].lower_rhs == pytest.approx(1.0)

    def test_constant_family(self):
        rows = domination_check(VaryingFamily.constant(ParetoTail(q=1.5)), 1.0, [1.0, 5.0, 50.0])
        assert all(row.holds for row in rows)

    def test_beyond_scan_is_unsupported(self):
        with pytest.raises(UnsupportedFamily):
            domination_check(VaryingFamily.counterexample(1.0), 0.5, [1e7])
