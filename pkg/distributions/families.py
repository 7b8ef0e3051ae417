import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import optimize

from config import config
from slowly_varying import (
    NoAnalyticConjugate,
    Normalizer,
    SlowlyVaryingFn,
    de_bruijn_conjugate,
    de_bruijn_numeric,
    monotone_adjust,
)
from .tails import ParetoTail, TailDistribution, TwoPoint


class UnsupportedFamily(ValueError):
    """Raised when a family sup has no closed form or finite scan"""


@dataclass(frozen=True)
class VaryingFamily:
    """
    Rule n -> law of X_n for a non-identically distributed sequence.

    kind "constant":       X_n ~ base for every n
    kind "counterexample": X_n = +-n^{1/p} with probability 1/(2n) each, 0 otherwise
    """
    kind: str
    base: Optional[TailDistribution] = None
    p: float = 1.0

    KINDS = ("constant", "counterexample")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise UnsupportedFamily(f"unknown family kind {self.kind!r}")
        if self.kind == "constant" and self.base is None:
            raise ValueError("constant family needs a base distribution")
        if self.kind == "counterexample" and self.p <= 0:
            raise ValueError(f"counterexample family needs p > 0, got {self.p}")

    @classmethod
    def constant(cls, d: TailDistribution) -> "VaryingFamily":
        return cls(kind="constant", base=d)

    @classmethod
    def counterexample(cls, p: float = 1.0) -> "VaryingFamily":
        return cls(kind="counterexample", p=p)

    @classmethod
    def from_descriptor(cls, desc: Dict) -> "VaryingFamily":
        if isinstance(desc, dict) and desc.get("kind") == "counterexample":
            extra = set(desc) - {"kind", "p"}
            if extra:
                raise ValueError(f"unknown keys {sorted(extra)} for family kind 'counterexample'")
            return cls.counterexample(float(desc.get("p", 1.0)))
        return cls.constant(TailDistribution.from_descriptor(desc))

    def descriptor(self) -> Dict:
        if self.kind == "counterexample":
            return {"kind": "counterexample", "p": self.p}
        return self.base.descriptor()

    @property
    def identical(self) -> bool:
        return self.kind == "constant"

    def member(self, n: int) -> TailDistribution:
        """Law of X_n"""
        if n < 1:
            raise ValueError(f"family index must be >= 1, got {n}")
        if self.kind == "constant":
            return self.base
        return TwoPoint(v=n ** (1.0 / self.p), mass=1.0 / n)

    def envelope_tail(self, x):
        """sup_n P(|X_n| > x)"""
        if self.kind == "constant":
            return self.base.tail(x)
        x = np.asarray(x, dtype=float)
        value = 1.0 / (np.floor(np.power(np.maximum(x, 0.0), self.p)) + 1.0)
        return float(value) if value.ndim == 0 else value

    def truncated_means(self, n: int, t: float) -> np.ndarray:
        """E(X_i 1(|X_i| <= t)) for i = 1..n"""
        if self.kind == "counterexample":
            return np.zeros(n)
        return np.full(n, self.base.signed_mean_below(t))

    def abs_band_means(self, n: int, lo: float, hi: float) -> np.ndarray:
        """E(|X_i| 1(lo < |X_i| <= hi)) for i = 1..n"""
        if self.kind == "constant":
            d = self.base
            return np.full(n, d.truncated_moment(1.0, hi) - d.truncated_moment(1.0, lo))
        i = np.arange(1, n + 1, dtype=float)
        atom = i ** (1.0 / self.p)
        return np.where((atom > lo) & (atom <= hi), atom / i, 0.0)


def envelope(fam: VaryingFamily, x: float) -> float:
    """Tail of the tight dominating variable: sup_n P(|X_n| > x)"""
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    return float(fam.envelope_tail(x))


def gut_condition(d: TailDistribution, norm: Normalizer, n: int = None, *, log_n: float = None) -> float:
    """n * P(|X| > b_n); log_n allows indices beyond float range"""
    if log_n is None:
        if n is None or n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return n * float(d.tail(norm.value(n)))
    if log_n < 0:
        raise ValueError("log_n must be nonnegative")
    return math.exp(log_n + float(d.log_tail(norm.log_value(log_n))))


def _ui_regularized(L: SlowlyVaryingFn) -> SlowlyVaryingFn:
    """L1 with y L1(y) strictly increasing, used for every level a"""
    return L if L.is_constant else monotone_adjust(L, 1.0)


def _ui_transform(p: float, L1: SlowlyVaryingFn):
    """f(x) = x^p L1(x^p) and f'(x)"""

    def f(x):
        y = np.power(x, p)
        return y * np.asarray(L1(y))

    def df(x):
        y = np.power(x, p)
        return p * np.power(x, p - 1) * (np.asarray(L1(y)) + y * np.asarray(L1.derivative(y)))

    return f, df


def _ui_threshold(p: float, L1: SlowlyVaryingFn, a: float) -> float:
    """t with t^p L1(t^p) = a"""
    if L1.is_constant:
        return (a / L1.coefficient) ** (1.0 / p)

    def h(v):
        return p * v + math.log(L1.eval_log(p * v)) - math.log(a)

    v0 = math.log(a) / p
    lo, hi = v0 - 1.0, v0 + 1.0
    while h(lo) > 0:
        lo -= 2.0 * (abs(lo) + 1.0)
    while h(hi) < 0:
        hi += 2.0 * (abs(hi) + 1.0)
    return math.exp(optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-14))


def _grows_without_bound(L: SlowlyVaryingFn) -> bool:
    return L.log_power > 0 or (L.log_power == 0 and L.loglog_power > 0)


def uniform_integrability_gap(fam: VaryingFamily, p: float, L: SlowlyVaryingFn, a: float) -> float:
    """sup_n E(Y_n 1(Y_n > a)) with Y_n = |X_n|^p L1(|X_n|^p), L1 = monotone_adjust(L, 1)"""
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    L = _ui_regularized(L)
    if fam.kind == "counterexample":
        # |X_n|^p = n exactly, so Y_n = n L(n) with probability 1/n
        if L.evaluator is None:
            if L.is_constant:
                return L.coefficient
            if _grows_without_bound(L):
                return math.inf
        n = np.arange(1, config.FAMILY_SCAN + 1, dtype=float)
        values = np.asarray(L(n))
        hit = n * values > a
        if not hit.any():
            raise UnsupportedFamily(f"no index up to {config.FAMILY_SCAN} has n L(n) > {a}")
        return float(values[hit].max())

    d = fam.base
    if isinstance(d, ParetoTail) and d.q < p:
        return math.inf
    if L.is_constant:
        t_a = (a / L.coefficient) ** (1.0 / p)
        return L.coefficient * d.upper_moment(p, t_a)
    f, df = _ui_transform(p, L)
    t_a = _ui_threshold(p, L, a)
    return d.transformed_upper_moment(f, df, t_a)


def _conjugate_log(L: SlowlyVaryingFn, log_n: float) -> float:
    """ln Lt(n) given ln n"""
    try:
        return math.log(de_bruijn_conjugate(L).eval_log(log_n))
    except NoAnalyticConjugate:
        return math.log(de_bruijn_numeric(L, log_x=max(log_n, 1.0)))


def compose_check(p: float, L: SlowlyVaryingFn, n: int = None, *, log_n: float = None) -> float:
    """
    f(g(n))/n for f(x) = x^p L(x^p) and g(x) = x^{1/p} Lt(x)^{1/p}.

    Since g(n)^p = n Lt(n), the ratio is Lt(n) L(n Lt(n)); it is formed in log space.
    """
    if not 0 < p < 2:
        raise ValueError(f"p must lie in (0, 2), got {p}")
    if log_n is None:
        if n is None or n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        log_n = math.log(n)
    log_conj = _conjugate_log(L, log_n)
    return math.exp(log_conj + math.log(L.eval_log(log_n + log_conj)))


@dataclass
class ComposeProfile:
    """f(g(n))/n over a grid of ln n"""
    log_n: List[float]
    ratios: List[float]
    threshold_log_n: Optional[float] = None
    trend: List[float] = field(default_factory=list)

    @property
    def settled(self) -> bool:
        return self.threshold_log_n is not None


def compose_profile(p: float, L: SlowlyVaryingFn, log_n_grid) -> ComposeProfile:
    """Ratios across the grid and the first grid point after which all exceed 1/2"""
    grid = [float(u) for u in log_n_grid]
    ratios = [compose_check(p, L, log_n=u) for u in grid]
    threshold = None
    for u, ratio in zip(reversed(grid), reversed(ratios)):
        if ratio <= 0.5:
            break
        threshold = u
    return ComposeProfile(
        log_n=grid,
        ratios=ratios,
        threshold_log_n=threshold,
        trend=[abs(ratio - 1.0) for ratio in ratios],
    )


@dataclass
class DominationRow:
    t: float
    lower_lhs: float
    lower_rhs: float
    upper_lhs: float
    upper_rhs: float

    @property
    def holds(self) -> bool:
        tol = 1e-12
        return (self.lower_lhs <= self.lower_rhs * (1 + tol) + tol
                and self.upper_lhs <= self.upper_rhs * (1 + tol) + tol)


def domination_check(fam: VaryingFamily, r: float, t_grid) -> List[DominationRow]:
    """
    Check, at each t, the moment inequalities for a family dominated by its envelope X:

        sup_n E(|X_n|^r 1(|X_n| <= t)) <= E(|X|^r 1(|X| <= t)) + t^r P(|X| > t)
        sup_n E(|X_n|^r 1(|X_n| > t))  <= E(|X|^r 1(|X| > t))
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    rows = []
    if fam.kind == "constant":
        d = fam.base
        for t in t_grid:
            below, above = d.truncated_moment(r, t), d.upper_moment(r, t)
            rows.append(DominationRow(t, below, below + t ** r * float(d.tail(t)), above, above))
        return rows

    # Envelope of the counterexample: P(|X| = k^{1/p}) = 1/(k(k+1)), k >= 1
    p = fam.p
    s = r / p
    scan = config.FAMILY_SCAN
    k = np.arange(1, scan + 1, dtype=float)
    weights = k ** s / (k * (k + 1.0))
    cumulative = np.cumsum(weights)
    # Lower bound for the series beyond the scan: sum_{k>K} k^{s-2} k/(k+1)
    remainder = (scan + 1.0) / (scan + 2.0) * (scan + 1.0) ** (s - 1.0) / (1.0 - s) if s < 1 else math.inf
    for t in t_grid:
        cut = int(math.floor(t ** p))
        if cut >= scan:
            raise UnsupportedFamily(f"t = {t} lies beyond the envelope scan")
        # Members: |X_n|^r = n^s with probability 1/n
        if cut < 1:
            lower_lhs = 0.0
        else:
            lower_lhs = 1.0 if s <= 1 else cut ** (s - 1.0)
        first_above = cut + 1
        if s > 1:
            upper_lhs = math.inf
        elif s == 1:
            upper_lhs = 1.0
        else:
            upper_lhs = first_above ** (s - 1.0)
        below = float(cumulative[cut - 1]) if cut >= 1 else 0.0
        lower_rhs = below + t ** r * float(fam.envelope_tail(t))
        # Partial sums plus the remainder bound understate the envelope series
        if s >= 1:
            upper_rhs = math.inf
        else:
            upper_rhs = float(cumulative[-1] - (cumulative[cut - 1] if cut >= 1 else 0.0)) + remainder
        rows.append(DominationRow(float(t), lower_lhs, lower_rhs, upper_lhs, upper_rhs))
    return rows
