import math
import warnings
from dataclasses import dataclass

import numpy as np

from .functions import SlowlyVaryingFn, de_bruijn_conjugate, monotone_adjust


@dataclass(frozen=True)
class Normalizer:
    """
    Normalizing sequence b_n for exponent p in (0, 2).

    rule "standard":  b_n = n^{1/p} L(n)
    rule "conjugate": b_n = n^{1/p} Lt(n)^{1/p}, Lt the de Bruijn conjugate of L

    A non-constant factor is regularized with monotone_adjust at r = 1/p, so
    it changes only below the ramp threshold and b_n is strictly increasing.
    """
    p: float
    L: SlowlyVaryingFn
    rule: str = "standard"

    RULES = ("standard", "conjugate")

    def __post_init__(self):
        if not 0 < self.p < 2:
            raise ValueError(f"p must lie in (0, 2), got {self.p}")
        if self.rule not in self.RULES:
            raise ValueError(f"unknown normalizer rule {self.rule!r}")
        if not 1 <= self.p < 2:
            warnings.warn(f"p = {self.p} lies outside the [1, 2) range of the maximal WLLN", stacklevel=3)
        # Resolve the conjugate once so a missing closed form fails at construction
        object.__setattr__(self, "_scale", self._scale_function())

    @classmethod
    def conjugate(cls, p: float, L: SlowlyVaryingFn) -> "Normalizer":
        return cls(p=p, L=L, rule="conjugate")

    def _scale_function(self) -> SlowlyVaryingFn:
        """Slowly varying factor, regularized so n^{1/p} times it is strictly increasing"""
        base = self.L if self.rule == "standard" else de_bruijn_conjugate(self.L).power(1.0 / self.p)
        return base if base.is_constant else monotone_adjust(base, 1.0 / self.p)

    @property
    def scale(self) -> SlowlyVaryingFn:
        """The slowly varying factor multiplying n^{1/p}"""
        return self._scale

    def value(self, n):
        """b_n (scalar or array of positive indices)"""
        n_arr = np.asarray(n, dtype=float)
        if np.any(n_arr < 1):
            raise ValueError("normalizer index must be >= 1")
        b = n_arr ** (1.0 / self.p) * np.asarray(self._scale(n_arr))
        return float(b) if b.ndim == 0 else b

    def log_value(self, log_n):
        """ln b_n given ln n; finite for indices far beyond float range"""
        log_n = np.asarray(log_n, dtype=float)
        result = log_n / self.p + np.log(self._scale.eval_log(log_n))
        return float(result) if result.ndim == 0 else result

    def dyadic(self, m):
        """b_{2^m}"""
        return np.exp(self.log_value(np.asarray(m, dtype=float) * math.log(2.0)))

    def dyadic_ratio(self, m: int) -> float:
        """b_{2^m} / b_{2^{m-1}}"""
        log2 = math.log(2.0)
        return math.exp(self.log_value(m * log2) - self.log_value((m - 1) * log2))

    def describe(self) -> dict:
        return {"p": self.p, "L": self.L.describe(), "rule": self.rule}


def normalizer_value(norm: Normalizer, n: int) -> float:
    """b_n = n^{1/p} L(n) (or the conjugate rule)"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return norm.value(n)
