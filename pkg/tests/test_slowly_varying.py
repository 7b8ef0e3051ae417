import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from config import config
from slowly_varying import (
    DivergenceError,
    NoAnalyticConjugate,
    Normalizer,
    SlowlyVaryingFn,
    de_bruijn_conjugate,
    de_bruijn_numeric,
    karamata_sum,
    monotone_adjust,
    normalizer_value,
)

LOG = SlowlyVaryingFn.log()


class TestDescriptors:
    @pytest.mark.parametrize("text", ["1", "3", "log", "log^2 * loglog^-1", "2 * log^0.5", "loglog"])
    def test_describe_inverts_parse(self, text):
        assert SlowlyVaryingFn.parse(text).describe() == text

    def test_parse_collects_powers(self):
        fn = SlowlyVaryingFn.parse("2*log^0.5*loglog^-1")
        assert fn.coefficient == 2.0
        assert fn.log_power == 0.5
        assert fn.loglog_power == -1.0
        assert fn.kind == "product"

    @pytest.mark.parametrize("text", ["", "log^x", "exp", "sqrt^2", "log * * loglog"])
    def test_malformed_descriptors(self, text):
        with pytest.raises(ValueError):
            SlowlyVaryingFn.parse(text)

    def test_power_stays_closed_form(self):
        fn = SlowlyVaryingFn.parse("4 * log^2").power(0.5)
        assert fn.coefficient == pytest.approx(2.0)
        assert fn.log_power == pytest.approx(1.0)


class TestEvaluation:
    def test_log_convention_below_e(self):
        assert LOG(1.0) == 1.0
        assert LOG(0.0) == 1.0
        assert LOG(math.e ** 3) == pytest.approx(3.0)

    def test_loglog_uses_nested_max(self):
        fn = SlowlyVaryingFn.loglog()
        assert fn(10.0) == 1.0
        assert fn(math.exp(math.e ** 2)) == pytest.approx(2.0)

    def test_eval_log_matches_direct(self):
        fn = SlowlyVaryingFn.parse("3 * log^2 * loglog^-1")
        u = np.array([0.5, 2.0, 10.0, 300.0])
        np.testing.assert_allclose(fn.eval_log(u), fn(np.exp(u)), rtol=1e-12)

    def test_eval_log_beyond_float_range(self):
        assert LOG.eval_log(5000.0) == 5000.0

    def test_custom_evaluator(self):
        fn = SlowlyVaryingFn.custom(lambda x: 2.0 + 0.0 * np.asarray(x), name="two")
        assert fn(123.0) == 2.0
        assert fn.describe() == "custom:two"

    @given(st.floats(min_value=50.0, max_value=600.0), st.floats(min_value=0.1, max_value=10.0))
    def test_slow_variation(self, u, lam):
        for fn in (LOG, SlowlyVaryingFn.log(-2.0), SlowlyVaryingFn.loglog(3.0)):
            ratio = fn.eval_log(u + math.log(lam)) / fn.eval_log(u)
            assert abs(ratio - 1.0) < 0.1

    def test_derivative_matches_finite_difference(self):
        fn = SlowlyVaryingFn.parse("log^2 * loglog")
        x = np.array([50.0, 1e3, 1e6])
        h = 1e-5 * x
        numeric = (fn(x + h) - fn(x - h)) / (2 * h)
        np.testing.assert_allclose(fn.derivative(x), numeric, rtol=1e-6)


class TestMonotoneAdjust:
    def test_constant_needs_no_ramp(self):
        assert monotone_adjust(SlowlyVaryingFn.constant(2.0), 1.0).ramp_threshold == 0.0

    def test_log_ramp_starts_after_one(self):
        adjusted = monotone_adjust(LOG, 1.0)
        assert adjusted.ramp_threshold == pytest.approx(1.01)

    @pytest.mark.parametrize("gamma, r, threshold", [(-1.0, 1.0, 2.72), (-2.0, 0.5, 54.60), (-3.0, 0.5, 403.43)])
    def test_threshold_is_first_grid_point_past_last_failure(self, gamma, r, threshold):
        # r + gamma / ln x > 0 exactly when x > exp(-gamma / r)
        adjusted = monotone_adjust(SlowlyVaryingFn.log(gamma), r)
        assert adjusted.ramp_threshold == pytest.approx(threshold)

    def test_rejects_condition_failing_across_grid(self, monkeypatch):
        monkeypatch.setattr(config, "SV_GRID_MAX", 100.0)
        with pytest.raises(ValueError):
            monotone_adjust(SlowlyVaryingFn.log(-1.0), 0.123)

    def test_adjusted_power_is_increasing(self):
        r = 1.0
        adjusted = monotone_adjust(SlowlyVaryingFn.log(-1.0), r)
        x = np.linspace(1e-3, 50.0, 20001)
        values = x ** r * adjusted(x)
        assert np.all(np.diff(values) > 0)

    def test_matches_original_beyond_threshold(self):
        adjusted = monotone_adjust(LOG, 0.5)
        x = np.array([10.0, 1e4, 1e9])
        np.testing.assert_allclose(adjusted(x), LOG(x))

    def test_rejects_nonpositive_r(self):
        with pytest.raises(ValueError):
            monotone_adjust(LOG, 0.0)


class TestConjugates:
    def test_analytic_conjugate_inverts_powers(self):
        conj = de_bruijn_conjugate(SlowlyVaryingFn.parse("2 * log^2 * loglog^-1"))
        assert conj.coefficient == 0.5
        assert conj.log_power == -2.0
        assert conj.loglog_power == 1.0

    def test_custom_has_no_analytic_conjugate(self):
        with pytest.raises(NoAnalyticConjugate):
            de_bruijn_conjugate(SlowlyVaryingFn.custom(lambda x: np.ones_like(np.asarray(x, dtype=float))))

    @pytest.mark.parametrize("text", ["1", "log", "log^-1", "loglog", "loglog^-1"])
    def test_identity_trend_at_large_x(self, text):
        L = SlowlyVaryingFn.parse(text)
        conj = de_bruijn_conjugate(L)
        u = 200.0
        value = L.eval_log(u)
        assert abs(value * conj.eval_log(u + math.log(value)) - 1.0) < 0.06

    def test_log_squared_trend_is_slower(self):
        L = SlowlyVaryingFn.log(2.0)
        conj = de_bruijn_conjugate(L)
        gaps = []
        for u in (50.0, 200.0, 1000.0):
            value = L.eval_log(u)
            gaps.append(abs(value * conj.eval_log(u + math.log(value)) - 1.0))
        assert gaps[1] == pytest.approx(0.098, abs=0.01)
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize("gamma, tolerance", [(-1.0, 0.05), (1.0, 0.05), (2.0, 0.15)])
    def test_numeric_fixed_point_near_analytic(self, gamma, tolerance):
        L = SlowlyVaryingFn.log(gamma)
        numeric = de_bruijn_numeric(L, log_x=200.0)
        analytic = de_bruijn_conjugate(L).eval_log(200.0)
        assert abs(numeric / analytic - 1.0) < tolerance

    def test_log_squared_gap_shrinks(self):
        L = SlowlyVaryingFn.log(2.0)
        gaps = [abs(de_bruijn_numeric(L, log_x=u) / de_bruijn_conjugate(L).eval_log(u) - 1.0)
                for u in (100.0, 200.0, 2000.0)]
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize("text", ["log", "log^-2", "3 * loglog"])
    def test_numeric_fixed_point_solves_identity(self, text):
        L = SlowlyVaryingFn.parse(text)
        y = de_bruijn_numeric(L, log_x=80.0, tol=1e-12)
        assert abs(y * L.eval_log(80.0 + math.log(y)) - 1.0) < 1e-10

    def test_numeric_rejects_small_x(self):
        with pytest.raises(ValueError):
            de_bruijn_numeric(LOG, 2.0)

    def test_divergence_reports_last_iterate(self, monkeypatch):
        monkeypatch.setattr(config, "FIXED_POINT_MAX_ITER", 1)
        with pytest.raises(DivergenceError) as err:
            de_bruijn_numeric(SlowlyVaryingFn.log(2.0), log_x=50.0, tol=1e-14)
        assert err.value.last_iterate > 0


class TestKaramata:
    @pytest.mark.parametrize("n", [1, 5, 60, 500])
    def test_ratio_bounded_for_log(self, n):
        res = karamata_sum(2.0, 2.0, LOG, n)
        assert 1.0 <= res.ratio < 2.0

    def test_constant_is_geometric(self):
        res = karamata_sum(3.0, 5.0, SlowlyVaryingFn.constant(), 4)
        assert res.total == pytest.approx(3 + 9 + 27 + 81)
        assert res.ratio == pytest.approx(120 / 81)

    def test_large_n_total_overflows_to_inf(self):
        res = karamata_sum(2.0, 2.0, LOG, 2000)
        assert math.isinf(res.total)
        assert res.ratio < 2.0

    def test_rejects_alpha_at_most_one(self):
        with pytest.raises(ValueError):
            karamata_sum(1.0, 2.0, LOG, 10)


class TestNormalizer:
    def test_standard_rule(self):
        norm = Normalizer(1.0, LOG)
        assert norm.value(100) == pytest.approx(100 * math.log(100))
        assert normalizer_value(norm, 100) == norm.value(100)

    def test_conjugate_rule(self):
        norm = Normalizer.conjugate(1.0, LOG)
        assert norm.value(1000) == pytest.approx(1000 / math.log(1000))

    def test_conjugate_rule_raises_power(self):
        norm = Normalizer.conjugate(1.5, SlowlyVaryingFn.log(-3.0))
        n = 10 ** 6
        expected = n ** (1 / 1.5) * math.log(n) ** 2.0
        assert norm.value(n) == pytest.approx(expected)

    def test_log_value_and_dyadic(self):
        norm = Normalizer(1.2, SlowlyVaryingFn.parse("log^2 * loglog"))
        assert norm.log_value(math.log(5000.0)) == pytest.approx(math.log(norm.value(5000)))
        np.testing.assert_allclose(norm.dyadic(np.arange(1, 20)), norm.value(2.0 ** np.arange(1, 20)))
        assert norm.dyadic_ratio(10) == pytest.approx(norm.value(1024) / norm.value(512))

    def test_dyadic_far_beyond_float_range(self):
        norm = Normalizer(1.0, LOG)
        assert np.isfinite(norm.log_value(3000 * math.log(2.0)))

    @pytest.mark.parametrize("p", [0.0, 2.0, -1.0])
    def test_rejects_p_outside_open_interval(self, p):
        with pytest.raises(ValueError):
            Normalizer(p, LOG)

    def test_warns_below_one(self):
        with pytest.warns(UserWarning):
            Normalizer(0.5, LOG)

    def test_no_warning_inside_range(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            Normalizer(1.5, LOG)

    def test_rejects_index_below_one(self):
        with pytest.raises(ValueError):
            Normalizer(1.0, LOG).value(0)

    @settings(max_examples=50)
    @given(st.integers(min_value=1, max_value=10 ** 12), st.sampled_from(["1", "log", "log^2 * loglog^-1"]))
    def test_standard_normalizer_increasing(self, n, text):
        norm = Normalizer(1.0, SlowlyVaryingFn.parse(text))
        assert norm.value(n + 1) >= norm.value(n)

    def test_decreasing_L_is_regularized(self):
        norm = Normalizer(1.9, SlowlyVaryingFn.log(-1.0))
        b = norm.value(np.arange(1, 10))
        assert np.all(np.diff(b) > 0)
        assert norm.scale.ramp_threshold == pytest.approx(6.69)
        assert norm.value(100) == pytest.approx(100 ** (1 / 1.9) / math.log(100))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=1.0, max_value=1.99), st.floats(min_value=-3.0, max_value=-0.1))
    def test_normalizer_strictly_increasing_for_decreasing_L(self, p, k):
        b = Normalizer(p, SlowlyVaryingFn.log(k)).value(np.arange(1, 2001))
        assert np.all(np.diff(b) > 0)
