import asyncio

import numpy as np
import pytest

from distributions import DiscreteLaw, ParetoTail, TwoPoint, VaryingFamily
from dyadic_diagnostics import (
    DyadicReduction,
    bound_sequences,
    c1,
    check_ab,
    decompose_path,
    default_ab,
    dyadic_scale,
    km_sequence,
    lambda_sum_check,
    lambda_threshold,
)
from generators import CounterexampleModel, IidModel, RngStream, generate
from slowly_varying import Normalizer, SlowlyVaryingFn

ONE = SlowlyVaryingFn.constant()
LOG = SlowlyVaryingFn.log()
PARETO_1 = ParetoTail(q=1.0, c=1.0)


class TestThresholds:
    def test_default_ab(self):
        assert default_ab(1.0) == (0.75, 0.25)
        a, b = default_ab(1.5)
        assert a + b == pytest.approx(1 / 1.5)

    @pytest.mark.parametrize("a, b", [(0.5, 0.3), (0.4, 0.2), (0.75, 0.0), (0.75, -0.1)])
    def test_check_ab_rejects(self, a, b):
        with pytest.raises(ValueError):
            check_ab(a, b)

    def test_check_ab_returns_p(self):
        assert check_ab(0.75, 0.25) == 1.0

    def test_c1(self):
        assert c1(1.0) == 2.0

    def test_lambda_threshold_range(self):
        with pytest.raises(ValueError):
            lambda_threshold(5, 4, 1.0, 0.75, 0.25, ONE)
        assert lambda_threshold(1, 1, 1.0, 0.75, 0.25, ONE) == pytest.approx(2.0)

    @pytest.mark.parametrize("L", [ONE, LOG])
    @pytest.mark.parametrize("a, b", [(0.75, 0.25), (0.6, 0.4), (0.9, 0.1)])
    def test_lambda_sums_below_bound(self, L, a, b):
        for n in range(1, 61):
            total, bound = lambda_sum_check(n, 0.5, a, b, L)
            assert total <= bound * (1 + 1e-12)


class TestDecomposition:
    @pytest.mark.parametrize("model, norm", [
        (IidModel(PARETO_1), Normalizer(1.0, LOG)),
        (IidModel(TwoPoint.rademacher()), Normalizer(1.5, ONE)),
        (IidModel(DiscreteLaw.from_lists([-1.0, 0.0, 3.0], [0.5, 0.3, 0.2])), Normalizer(1.2, ONE)),
        (CounterexampleModel(1.0), Normalizer(1.0, ONE)),
    ])
    def test_no_violations(self, model, norm):
        fam = model.family()
        stream = RngStream(77)
        for scale in range(1, 11):
            for r in range(50):
                path = generate(model, 2 ** scale - 1, stream.spawn(1000 * scale + r))
                dec = decompose_path(path, fam, norm)
                assert dec.n == scale
                assert not dec.violated, (scale, r, dec.slack)

    def test_terms_per_scale(self):
        path = generate(IidModel(PARETO_1), 63, RngStream(1))
        dec = decompose_path(path, PARETO_1, Normalizer(1.0, LOG))
        assert len(dec.half_block_terms) == len(dec.y_terms) == len(dec.tail_terms) == 6
        assert dec.slack == pytest.approx(dec.rhs - dec.lhs)

    @pytest.mark.parametrize("length", [0, 4, 10])
    def test_rejects_bad_length(self, length):
        with pytest.raises(ValueError):
            decompose_path(np.zeros(length), PARETO_1, Normalizer(1.0, ONE))


class TestSequences:
    @pytest.mark.parametrize("d, norm", [
        (PARETO_1, Normalizer(1.0, LOG)),
        (DiscreteLaw.from_lists([-1.0, 0.0, 3.0], [0.5, 0.3, 0.2]), Normalizer(1.0, ONE)),
        (VaryingFamily.counterexample(1.0), Normalizer(1.0, ONE)),
    ])
    def test_km_chain_holds(self, d, norm):
        seq = km_sequence(d, norm, 20)
        assert seq.chain_holds
        assert len(seq.k) == 20
        assert seq.ratio_sup >= 2.0

    def test_km_symmetric_law_has_no_drift(self):
        seq = km_sequence(PARETO_1, Normalizer(1.0, LOG), 10)
        np.testing.assert_array_equal(seq.k, np.zeros(10))

    def test_km_samples_large_ranges(self):
        seq = km_sequence(PARETO_1, Normalizer(1.0, LOG), 30)
        assert seq.chain_holds
        assert np.all(np.isfinite(seq.middle))

    def test_bound_sequences_decay(self):
        a, b = default_ab(1.0)
        seqs = bound_sequences(PARETO_1, Normalizer(1.0, LOG), a, b, 1.0, 2000)
        n = seqs.n.astype(float)
        for values in (seqs.tail_drift, seqs.i_bound, seqs.j_bound):
            assert values[-1] < 1e-2
            assert np.all(np.diff(values[19:]) < 0)
            assert np.max(n[19:] * values[19:]) < 20.0

    def test_bound_rows(self):
        a, b = default_ab(1.0)
        rows = list(bound_sequences(PARETO_1, Normalizer(1.0, LOG), a, b, 1.0, 5).as_rows())
        assert [row["n"] for row in rows] == [1, 2, 3, 4, 5]
        assert set(rows[0]) == {"n", "tail_drift", "I_bound", "J_bound"}

    def test_bound_sequences_reject_bad_eps(self):
        with pytest.raises(ValueError):
            bound_sequences(PARETO_1, Normalizer(1.0, LOG), 0.75, 0.25, 0.0, 10)


class TestReduction:
    @pytest.mark.parametrize("n, m", [(1, 1), (4, 3), (7, 3), (8, 4)])
    def test_dyadic_scale(self, n, m):
        assert dyadic_scale(n) == m

    def test_dyadic_scale_rejects_zero(self):
        with pytest.raises(ValueError):
            dyadic_scale(0)

    def test_reduction_is_reproducible(self):
        def run(threads):
            check = DyadicReduction(IidModel(TwoPoint.rademacher()), "max_centered_truncmean",
                                    Normalizer(1.0, ONE), 100, 0.2, 200, seed=8, threads=threads)
            return asyncio.run(check.run())

        first, again = run(1), run(4)
        assert first.m == 7
        assert first.dyadic.n == 128
        assert first.direct.p_hat == again.direct.p_hat
        assert first.dyadic.p_hat == again.dyadic.p_hat
        assert first.gap == pytest.approx(first.direct.p_hat - first.dyadic.p_hat)

    def test_dyadic_statistic_truncates_at_dyadic_level(self):
        law = DiscreteLaw.from_lists([0.0, 1000.0], [0.99, 0.01])
        check = DyadicReduction(IidModel(law), "max_centered_truncmean", Normalizer(1.0, ONE), 100, 0.2, 100, seed=1)
        assert check.b_dyadic == pytest.approx(128.0)
        path = np.zeros(127)
        path[0] = 1000.0
        # the atom exceeds b_128, so it drops out of the truncated sums
        assert check.dyadic_statistic(path) == 0.0
        path[0] = 100.0
        assert check.dyadic_statistic(path) == pytest.approx(100.0 / 128.0)

    def test_max_abs_dyadic_statistic_is_untruncated(self):
        law = DiscreteLaw.from_lists([0.0, 1000.0], [0.99, 0.01])
        check = DyadicReduction(IidModel(law), "max_abs", Normalizer(1.0, ONE), 100, 0.2, 100, seed=1)
        path = np.zeros(127)
        path[5] = 1000.0
        assert check.dyadic_statistic(path) == pytest.approx(1000.0 / 128.0)

    def test_reduction_needs_reps(self):
        with pytest.raises(ValueError):
            DyadicReduction(IidModel(TwoPoint.rademacher()), "max_abs", Normalizer(1.0, ONE), 10, 0.2, 10, seed=1)
