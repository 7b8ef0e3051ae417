import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from distributions import TailDistribution, VaryingFamily
from slowly_varying import Normalizer, SlowlyVaryingFn

LOG2 = math.log(2.0)


def default_ab(p: float) -> Tuple[float, float]:
    """a = 1/2 + 1/(4p), b = 1/p - a"""
    a = 0.5 + 0.25 / p
    return a, 1.0 / p - a


def check_ab(a: float, b: float) -> float:
    """Validate 1/2 < a, b > 0 and return p = 1/(a + b)"""
    if not a > 0.5:
        raise ValueError(f"a must exceed 1/2, got {a}")
    if not b > 0:
        raise ValueError(f"b must be positive (a < 1/p), got {b}")
    return 1.0 / (a + b)


def c1(b: float) -> float:
    """C_1(b) = 2^b / (2^b - 1)"""
    return 2.0 ** b / (2.0 ** b - 1.0)


def lambda_threshold(m: int, n: int, eps1: float, a: float, b: float, L: SlowlyVaryingFn) -> float:
    """lambda_{m,n} = eps1 2^{bm} 2^{an} L(2^n)"""
    check_ab(a, b)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    log_value = math.log(eps1) + (b * m + a * n) * LOG2 + math.log(L.eval_log(n * LOG2))
    return math.exp(log_value)


def lambda_sum_check(n: int, eps1: float, a: float, b: float, L: SlowlyVaryingFn) -> Tuple[float, float]:
    """(sum_{m=1}^n lambda_{m,n}, C_1(b) eps1 b_{2^n}) with b_{2^n} = 2^{n/p} L(2^n)"""
    p = check_ab(a, b)
    total = math.fsum(lambda_threshold(m, n, eps1, a, b, L) for m in range(1, n + 1))
    bound = c1(b) * eps1 * math.exp(n * LOG2 / p + math.log(L.eval_log(n * LOG2)))
    return total, bound


@dataclass
class DyadicDecomposition:
    """Both sides of the dyadic block inequality for one path of length 2^n - 1"""
    n: int
    lhs: float
    half_block_terms: np.ndarray
    y_terms: np.ndarray
    tail_terms: np.ndarray

    @property
    def rhs(self) -> float:
        return float(self.half_block_terms.sum() + self.y_terms.sum() + self.tail_terms.sum())

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def violated(self) -> bool:
        return self.slack < -1e-9 * (1.0 + self.rhs)


def _as_family(d: Union[TailDistribution, VaryingFamily]) -> VaryingFamily:
    return d if isinstance(d, VaryingFamily) else VaryingFamily.constant(d)


def decompose_path(path: np.ndarray, d: Union[TailDistribution, VaryingFamily], norm: Normalizer) -> DyadicDecomposition:
    """
    max_{j<2^n} |S_{j,n}| against

        sum_m max_k |half-block sums of X_{i,2^{m-1}} - E X_{i,2^{m-1}}|
      + sum_m max_k |block sums of Y_{i,m}|
      + sum_m 2^{m+1} b_{2^m} P(|X| > b_{2^{m-1}})

    with X_{i,t} = X_i 1(|X_i| <= b_t) and blocks [k 2^m + 1, (k+1) 2^m].
    The final block at each scale stops at index 2^n - 1.
    """
    path = np.asarray(path, dtype=float)
    length = len(path) + 1
    if length < 2 or length & (length - 1):
        raise ValueError(f"path length must be 2^n - 1, got {len(path)}")
    n = length.bit_length() - 1
    fam = _as_family(d)
    size = length - 1
    absolute = np.abs(path)
    b = norm.dyadic(np.arange(n + 1))

    centered_top = np.where(absolute <= b[n], path, 0.0) - fam.truncated_means(size, b[n])
    lhs = float(np.abs(np.cumsum(centered_top)).max())

    half_terms = np.empty(n)
    y_terms = np.empty(n)
    tail_terms = np.empty(n)
    for m in range(1, n + 1):
        lo, hi = b[m - 1], b[m]
        z = np.zeros(length)
        z[:size] = np.where(absolute <= lo, path, 0.0) - fam.truncated_means(size, lo)
        half = z.reshape(length >> m, 1 << m)[:, : 1 << (m - 1)].sum(axis=1)
        half_terms[m - 1] = np.abs(half).max()

        y = np.zeros(length)
        band = np.where((absolute > lo) & (absolute <= hi), absolute, 0.0)
        y[:size] = band - fam.abs_band_means(size, lo, hi)
        y_terms[m - 1] = np.abs(y.reshape(length >> m, 1 << m).sum(axis=1)).max()

        tail_terms[m - 1] = 2.0 ** (m + 1) * hi * float(fam.envelope_tail(lo))

    return DyadicDecomposition(n=n, lhs=lhs, half_block_terms=half_terms, y_terms=y_terms, tail_terms=tail_terms)
