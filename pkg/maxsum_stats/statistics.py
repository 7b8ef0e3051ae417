import math
from enum import Enum
from fractions import Fraction
from typing import Tuple, Union

import numpy as np
from scipy.special import digamma

from distributions import TailDistribution, VaryingFamily
from slowly_varying import Normalizer

EULER_GAMMA = float(np.euler_gamma)


class StatisticKind(Enum):
    """Path statistics and the normalizer rule each one is stated with"""
    MAX_CENTERED_TRUNCMEAN = "max_centered_truncmean"
    PLAIN_CENTERED_SUM = "plain_centered_sum"
    MAX_CENTERED_MEAN = "max_centered_mean"
    MAX_ABS = "max_abs"
    CENTERING_DRIFT = "centering_drift"

    @property
    def rule(self) -> str:
        return "conjugate" if self is StatisticKind.MAX_CENTERED_MEAN else "standard"

    @property
    def deterministic(self) -> bool:
        return self is StatisticKind.CENTERING_DRIFT

    @property
    def truncated_centering(self) -> bool:
        return self in (StatisticKind.MAX_CENTERED_TRUNCMEAN, StatisticKind.PLAIN_CENTERED_SUM)

    @classmethod
    def parse(cls, name: Union[str, "StatisticKind"]) -> "StatisticKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(name)
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown statistic kind {name!r} (known: {known})") from None


def as_family(fam: Union[VaryingFamily, TailDistribution]) -> VaryingFamily:
    if isinstance(fam, VaryingFamily):
        return fam
    return VaryingFamily.constant(fam)


def centering(kind: StatisticKind, fam: VaryingFamily, n: int, b_n: float) -> np.ndarray:
    """Per-index centering constants for the first n coordinates"""
    if kind.truncated_centering:
        return fam.truncated_means(n, b_n)
    if kind is StatisticKind.MAX_CENTERED_MEAN:
        if fam.kind == "counterexample":
            return np.zeros(n)
        return np.full(n, fam.base.mean())
    return np.zeros(n)


def centering_drift(fam: VaryingFamily, norm: Normalizer, n: int, b_n: float = None) -> float:
    """max_j |sum_{i<=j} E(X_i 1(|X_i| > b_n))| / b_n"""
    b_n = norm.value(n) if b_n is None else b_n
    if fam.kind == "counterexample":
        return 0.0
    # identical terms: the partial sums are monotone, so the max sits at j = n
    return n * abs(fam.base.signed_mean_above(b_n)) / b_n


def statistic_value(kind: Union[str, StatisticKind], path: np.ndarray,
                    fam: Union[VaryingFamily, TailDistribution], norm: Normalizer,
                    center: np.ndarray = None, b_n: float = None) -> float:
    """
    Normalized statistic of X_1..X_n with n = len(path) and b_n from norm.

    center may carry precomputed centering constants for the prefix; b_n
    overrides the truncation and normalizing level.
    """
    kind = StatisticKind.parse(kind)
    if norm.rule != kind.rule:
        raise ValueError(f"{kind.value} is stated with the {kind.rule} normalizer, got {norm.rule}")
    fam = as_family(fam)
    path = np.asarray(path, dtype=float)
    n = len(path)
    if n < 1:
        raise ValueError("path must be nonempty")
    if b_n is None:
        b_n = norm.value(n)
    if kind is StatisticKind.CENTERING_DRIFT:
        return centering_drift(fam, norm, n, b_n)
    if kind is StatisticKind.MAX_ABS:
        return float(np.abs(path).max()) / b_n
    if center is None:
        center = centering(kind, fam, n, b_n)
    partial = np.cumsum(path - center)
    if kind is StatisticKind.PLAIN_CENTERED_SUM:
        return abs(float(partial[-1])) / b_n
    return float(np.abs(partial).max()) / b_n


def harmonic(n):
    """H_n = digamma(n + 1) + Euler's constant (H_0 = 0)"""
    n = np.asarray(n, dtype=float)
    value = np.where(n > 0, digamma(n + 1.0) + EULER_GAMMA, 0.0)
    return float(value) if value.ndim == 0 else value


def first_index_above(t: float, p: float) -> int:
    """Smallest i >= 1 with i^{1/p} > t"""
    if t < 1.0:
        return 1
    m = int(math.floor(t ** p)) + 1
    while m > 1 and (m - 1) ** (1.0 / p) > t:
        m -= 1
    while m ** (1.0 / p) <= t:
        m += 1
    return m


def tail_sum(fam: Union[VaryingFamily, TailDistribution], norm: Normalizer, n: int, eps: float,
             start: int = 1, exact: bool = False) -> Union[float, Fraction]:
    """sum_{i=start}^{n} P(|X_i| > eps b_n)"""
    if n < 1 or eps <= 0:
        raise ValueError("tail_sum needs n >= 1 and eps > 0")
    fam = as_family(fam)
    start = max(start, 1)
    if start > n:
        return Fraction(0) if exact else 0.0
    threshold = eps * norm.value(n)
    if fam.kind == "constant":
        return (n - start + 1) * float(fam.base.tail(threshold))
    # counterexample: P(|X_i| > t) = 1/i when i^{1/p} > t, else 0
    lo = max(start, first_index_above(threshold, fam.p))
    if lo > n:
        return Fraction(0) if exact else 0.0
    if exact:
        return sum((Fraction(1, i) for i in range(lo, n + 1)), Fraction(0))
    if n - lo < 10_000:
        return float(np.sum(1.0 / np.arange(lo, n + 1, dtype=float)))
    return harmonic(n) - harmonic(lo - 1)


def restricted_tail_sums(p: float, n_max: int, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    sum_{i=floor(n/2)}^{n} P(|X_i| > eps n^{1/p}) for the counterexample and
    every n in [2, n_max], through harmonic numbers.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    n = np.arange(2, n_max + 1, dtype=float)
    # i^{1/p} > eps n^{1/p}  <=>  i > eps^p n
    first = np.floor(eps ** p * n) + 1.0
    lo = np.maximum(np.floor(n / 2.0), first)
    sums = np.where(lo <= n, harmonic(n) - harmonic(lo - 1.0), 0.0)
    return n.astype(np.int64), sums


def counterexample_max_prob(p: float, n: int, eps: float) -> float:
    """P(max_{i<=n} |X_i| > eps n^{1/p}) = 1 - (m - 1)/n by the telescoping product"""
    if not 0 < eps < 0.25:
        raise ValueError(f"eps must lie in (0, 1/4), got {eps}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = first_index_above(eps * n ** (1.0 / p), p)
    if m > n:
        return 0.0
    return 1.0 - (m - 1) / n
