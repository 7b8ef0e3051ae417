import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distributions import (
    DiscreteLaw,
    ParetoTail,
    PointMass,
    QuadratureError,
    TailDistribution,
    TwoPoint,
    UniformTail,
    integrate_panels,
    tail,
    truncated_moment,
)
from slowly_varying import SlowlyVaryingFn

PARETO_1 = ParetoTail(q=1.0, c=1.0)


class TestParetoTail:
    def test_tail_closed_form(self):
        assert PARETO_1.tail(0.5) == 1.0
        assert PARETO_1.tail(4.0) == 0.25
        assert PARETO_1.unit_point == pytest.approx(1.0)

    def test_truncated_moment_at_r_equal_q(self):
        assert PARETO_1.truncated_moment(1.0, math.e ** 3) == pytest.approx(3.0)

    def test_truncated_moment_above_q(self):
        assert PARETO_1.truncated_moment(2.0, 10.0) == pytest.approx(9.0)

    def test_upper_moment(self):
        assert PARETO_1.upper_moment(0.5, 4.0) == pytest.approx(1.0)
        assert math.isinf(PARETO_1.upper_moment(1.0, 4.0))

    def test_closed_form_agrees_with_integration(self):
        d = ParetoTail(q=1.5, c=2.0)
        generic = TailDistribution.truncated_moment(d, 0.5, 50.0)
        assert d.truncated_moment(0.5, 50.0) == pytest.approx(generic, rel=1e-8)
        generic_upper = TailDistribution.upper_moment(d, 0.5, 3.0)
        assert d.upper_moment(0.5, 3.0) == pytest.approx(generic_upper, rel=1e-7)

    def test_log_tail_far_beyond_float_range(self):
        assert PARETO_1.log_tail(10.0) == pytest.approx(-10.0)
        assert PARETO_1.log_tail(5000.0) == pytest.approx(-5000.0)

    @pytest.mark.parametrize("r, u", [(2.0, math.log(10.0)), (1.0, 3.0), (0.5, 4.0)])
    def test_log_truncated_moment_matches(self, r, u):
        expected = math.log(PARETO_1.truncated_moment(r, math.exp(u)))
        assert PARETO_1.log_truncated_moment(r, u) == pytest.approx(expected, rel=1e-12)

    def test_log_truncated_moment_at_huge_level(self):
        assert np.isfinite(PARETO_1.log_truncated_moment(2.0, 2000.0))
        assert PARETO_1.log_truncated_moment(2.0, -1.0) == -math.inf

    def test_modulated_tail_is_regularized(self):
        d = ParetoTail(q=1.0, L0=SlowlyVaryingFn.log())
        assert d.L0.ramp_threshold > 0
        t = np.linspace(0.01, 100.0, 10001)
        assert np.all(np.diff(d.tail(t)) <= 0)

    def test_modulated_log_space_needs_finite_level(self):
        d = ParetoTail(q=1.0, L0=SlowlyVaryingFn.log())
        with pytest.raises(OverflowError):
            d.log_truncated_moment(2.0, 800.0)

    def test_quantile_inverts_tail(self):
        d = ParetoTail(q=1.0, L0=SlowlyVaryingFn.log())
        assert d.tail(abs(d.quantile(0.9))) == pytest.approx(0.2, rel=1e-8)
        u = np.array([0.6, 0.8, 0.95])
        np.testing.assert_allclose(d.tail(np.abs(d.quantile(u))), 2 * (1 - u), rtol=1e-6)

    def test_quantile_is_symmetric(self):
        u = np.array([0.01, 0.2, 0.4])
        np.testing.assert_allclose(PARETO_1.quantile(u), -PARETO_1.quantile(1 - u), rtol=1e-12)

    def test_no_mean_at_q_one(self):
        with pytest.raises(ValueError):
            PARETO_1.mean()
        assert ParetoTail(q=1.5).mean() == 0.0

    def test_descriptor_strips_ramp(self):
        d = ParetoTail(q=1.0, L0=SlowlyVaryingFn.log())
        desc = d.descriptor()
        assert desc == {"kind": "pareto", "q": 1.0, "c": 1.0, "L0": "log"}
        assert TailDistribution.from_descriptor(desc) == d

    @settings(max_examples=50)
    @given(st.floats(min_value=0.0, max_value=1e6), st.floats(min_value=0.0, max_value=1e6))
    def test_tail_nonincreasing(self, s, t):
        lo, hi = min(s, t), max(s, t)
        assert PARETO_1.tail(lo) >= PARETO_1.tail(hi)

    @settings(max_examples=50)
    @given(st.floats(min_value=0.1, max_value=1e4), st.floats(min_value=0.1, max_value=1e4))
    def test_truncated_moment_nondecreasing(self, s, t):
        d = ParetoTail(q=1.5)
        lo, hi = min(s, t), max(s, t)
        assert d.truncated_moment(1.0, lo) <= d.truncated_moment(1.0, hi)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            ParetoTail(q=0.0)


class TestSimpleLaws:
    def test_two_point(self):
        d = TwoPoint(v=3.0, mass=0.2)
        assert d.tail(2.9) == 0.2
        assert d.tail(3.0) == 0.0
        assert d.truncated_moment(2.0, 3.0) == pytest.approx(1.8)
        assert d.upper_moment(2.0, 3.0) == 0.0
        assert d.quantile(0.05) == -3.0
        assert d.quantile(0.5) == 0.0
        assert d.quantile(0.95) == 3.0

    def test_rademacher_descriptor(self):
        d = TwoPoint.rademacher()
        assert d.descriptor() == {"kind": "rademacher"}
        assert TailDistribution.from_descriptor({"kind": "rademacher"}) == d

    def test_point_mass(self):
        d = PointMass(2.0)
        assert not d.symmetric
        assert d.signed_mean_below(1.0) == 0.0
        assert d.signed_mean_below(2.0) == 2.0
        assert d.signed_mean_above(1.0) == 2.0
        assert d.mean() == 2.0

    def test_uniform(self):
        d = UniformTail(2.0)
        assert d.tail(1.0) == 0.5
        assert d.truncated_moment(1.0, 1.0) == pytest.approx(0.25)
        assert d.upper_moment(1.0, 1.0) == pytest.approx(0.75)
        assert d.moment(1.0) == pytest.approx(1.0)

    def test_discrete(self):
        d = DiscreteLaw.from_lists([-1.0, 2.0, 5.0], [0.5, 0.3, 0.2])
        assert not d.symmetric
        assert d.tail(1.0) == pytest.approx(0.5)
        assert d.signed_mean_below(2.0) == pytest.approx(0.1)
        np.testing.assert_allclose(d.signed_means_below([0.5, 1.0, 2.0, 5.0]), [0.0, -0.5, 0.1, 1.1])
        assert d.mean() == pytest.approx(1.1)
        np.testing.assert_array_equal(d.quantile(np.array([0.3, 0.5, 0.85])), [-1.0, 2.0, 5.0])

    def test_discrete_symmetric_detection(self):
        assert DiscreteLaw.uniform_over([-2.0, -1.0, 1.0, 2.0]).symmetric

    def test_discrete_rejects_bad_probs(self):
        with pytest.raises(ValueError):
            DiscreteLaw.from_lists([0.0, 1.0], [0.5, 0.6])

    def test_samples_follow_quantile(self):
        rng = np.random.default_rng(3)
        x = UniformTail(1.0).sample(rng, 20000)
        assert np.all(np.abs(x) <= 1.0)
        assert abs(float(np.mean(np.abs(x) > 0.5)) - 0.5) < 0.02

    @pytest.mark.parametrize("d", [PARETO_1, ParetoTail(q=1.5, L0=SlowlyVaryingFn.log())])
    def test_pareto_samples_match_tail(self, d):
        size = 100_000
        x = np.abs(d.sample(np.random.default_rng(17), size))
        levels = np.geomspace(1.05 * d.unit_point, 40.0 * d.unit_point, 20)
        expected = np.asarray(d.tail(levels))
        observed = np.array([np.mean(x > t) for t in levels])
        sigma = np.sqrt(expected * (1 - expected) / size)
        assert np.all(np.abs(observed - expected) <= 5 * sigma + 1e-12)

    def test_pareto_samples_are_symmetric(self):
        x = PARETO_1.sample(np.random.default_rng(5), 100_000)
        assert abs(float(np.mean(x > 0)) - 0.5) < 5 * 0.5 / math.sqrt(100_000)


class TestDescriptorsAndHelpers:
    @pytest.mark.parametrize("desc", [
        {"kind": "pareto", "q": 1.5, "c": 2.0, "L0": "1"},
        {"kind": "two_point", "v": 2.0, "mass": 0.5},
        {"kind": "point_mass", "c": 1.0},
        {"kind": "uniform", "v": 3.0},
        {"kind": "discrete", "values": [-1.0, 1.0], "probs": [0.5, 0.5]},
    ])
    def test_descriptor_round_trip(self, desc):
        d = TailDistribution.from_descriptor(desc)
        assert TailDistribution.from_descriptor(d.descriptor()) == d

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            TailDistribution.from_descriptor({"kind": "cauchy"})

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            TailDistribution.from_descriptor({"kind": "uniform", "v": 1.0, "w": 2.0})

    def test_tail_helper_rejects_negative_level(self):
        with pytest.raises(ValueError):
            tail(PARETO_1, -1.0)

    def test_truncated_moment_rejects_nonpositive_order(self):
        with pytest.raises(ValueError):
            truncated_moment(PARETO_1, 0.0, 2.0)

    def test_integrate_panels(self):
        assert integrate_panels(lambda x: x * x, 0.0, 3.0) == pytest.approx(9.0)
        assert integrate_panels(lambda x: 1.0 / (x * x), 1.0, math.inf) == pytest.approx(1.0)

    def test_quadrature_error_carries_estimate(self):
        err = QuadratureError("no convergence", 1.5, 0.25)
        assert err.estimate == 1.5
        assert err.error_bound == 0.25
        assert "1.5" in str(err)
