import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from distributions import TailDistribution, VaryingFamily
from slowly_varying import Normalizer
from .decomposition import LOG2, check_ab

EXACT_RANGE_CAP = 2 ** 20
SAMPLED_POINTS = 4096


@dataclass
class KmSequence:
    """K_m with the middle and final terms of its bound chain, m = 1..m_max"""
    m: np.ndarray
    k: np.ndarray
    middle: np.ndarray
    chain_bound: np.ndarray
    ratio_sup: float

    @property
    def chain_holds(self) -> bool:
        tol = 1e-12
        return bool(np.all(self.k <= self.middle * (1 + tol) + tol)
                    and np.all(self.middle <= self.chain_bound * (1 + tol) + tol))


def _indices_in(lo: int, hi: int) -> np.ndarray:
    """lo..hi-1 exactly, or a log-spaced sample with both ends when the range is large"""
    if hi - lo <= EXACT_RANGE_CAP:
        return np.arange(lo, hi, dtype=float)
    sample = np.unique(np.floor(np.geomspace(lo, hi - 1, SAMPLED_POINTS)))
    return sample


def km_sequence(d: Union[TailDistribution, VaryingFamily], norm: Normalizer, m_max: int) -> KmSequence:
    """
    K_m = max_{2^{m-1} <= n' < 2^m} max_{j < 2^m} |sum_{i<=j} E(X_{i,2^m} - X_{i,n'})| / b_{2^{m-1}}

    reported with sum_{i<=2^m} E|X_i| 1(b_{2^{m-1}} < |X_i| <= b_{2^m}) / b_{2^{m-1}}
    and sup_m (b_{2^m} / b_{2^{m-1}}) 2^m P(|X| > b_{2^{m-1}}).
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    fam = d if isinstance(d, VaryingFamily) else VaryingFamily.constant(d)
    ms = np.arange(1, m_max + 1)
    b = norm.dyadic(np.arange(m_max + 1))
    ratio_sup = float(np.max(b[1:] / b[:-1]))
    k_values = np.zeros(m_max)
    middle = np.zeros(m_max)
    chain = np.zeros(m_max)
    for m in ms:
        lo, hi = b[m - 1], b[m]
        size = 2 ** m
        if fam.kind == "constant":
            base = fam.base
            # identical summands: |partial sums| peak at j = 2^m - 1
            levels = norm.value(_indices_in(2 ** (m - 1), 2 ** m))
            gaps = base.signed_mean_below(hi) - base.signed_means_below(levels)
            k_values[m - 1] = (size - 1) * float(np.abs(gaps).max()) / lo
            middle[m - 1] = size * (base.truncated_moment(1.0, hi) - base.truncated_moment(1.0, lo)) / lo
        else:
            # symmetric members: every truncated mean vanishes
            middle[m - 1] = float(fam.abs_band_means(size, lo, hi).sum()) / lo
        chain[m - 1] = ratio_sup * size * float(fam.envelope_tail(lo))
    return KmSequence(m=ms, k=k_values, middle=middle, chain_bound=chain, ratio_sup=ratio_sup)


@dataclass
class BoundSequences:
    """Deterministic sequences whose decay drives the dyadic argument, n = 1..n_max"""
    n: np.ndarray
    tail_drift: np.ndarray
    i_bound: np.ndarray
    j_bound: np.ndarray

    def as_rows(self):
        for n, t, i, j in zip(self.n, self.tail_drift, self.i_bound, self.j_bound):
            yield {"n": int(n), "tail_drift": float(t), "I_bound": float(i), "J_bound": float(j)}


def _cumulative_log_sum(log_terms: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.logaddexp.accumulate(log_terms)


def bound_sequences(d: TailDistribution, norm: Normalizer, a: float, b: float, eps1: float,
                    n_max: int) -> BoundSequences:
    """
    tail_drift_n = sum_m b_{2^m} 2^{m+1} P(|X| > b_{2^{m-1}}) / b_{2^n}
    I_bound_n    = eps1^-2 2^{-n(2a-1)} L^-2(2^n) sum_m 2^{m(2a-1)} L^2(2^m) 2^m P(|X| > b_{2^{m-1}})
    J_bound_n    = eps1^-2 2^{n(1-2a)} L^-2(2^n) sum_m 2^{-2bm} Q_m,
                   Q_m = E X^2 1(|X| <= b_{2^{m-1}}) + b_{2^{m-1}}^2 P(|X| > b_{2^{m-1}})

    Every sum is accumulated in log space.
    """
    check_ab(a, b)
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    m = np.arange(1, n_max + 1, dtype=float)
    log_b = norm.log_value(np.arange(n_max + 1, dtype=float) * LOG2)
    log_b_prev, log_b_cur = log_b[:-1], log_b[1:]
    log_L = np.log(norm.scale.eval_log(m * LOG2))
    log_tail = np.asarray(d.log_tail(log_b_prev), dtype=float)

    with np.errstate(divide="ignore"):
        drift_terms = log_b_cur + (m + 1) * LOG2 + log_tail
        tail_drift = np.exp(_cumulative_log_sum(drift_terms) - log_b_cur)

        i_terms = m * (2 * a - 1) * LOG2 + 2 * log_L + m * LOG2 + log_tail
        i_bound = np.exp(_cumulative_log_sum(i_terms) - 2 * math.log(eps1) - m * (2 * a - 1) * LOG2 - 2 * log_L)

        log_second = np.array([d.log_truncated_moment(2.0, u) for u in log_b_prev])
        log_q = np.logaddexp(log_second, 2 * log_b_prev + log_tail)
        j_terms = -2 * b * m * LOG2 + log_q
        j_bound = np.exp(_cumulative_log_sum(j_terms) - 2 * math.log(eps1) + m * (1 - 2 * a) * LOG2 - 2 * log_L)

    return BoundSequences(
        n=m.astype(np.int64),
        tail_drift=np.nan_to_num(tail_drift, nan=0.0),
        i_bound=np.nan_to_num(i_bound, nan=0.0),
        j_bound=np.nan_to_num(j_bound, nan=0.0),
    )
