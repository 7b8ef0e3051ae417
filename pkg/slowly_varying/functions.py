import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from config import config

E = math.e
RAMP_COARSE_POINTS = 100_000


class NoAnalyticConjugate(ValueError):
    """Raised when a slowly varying function has no closed-form de Bruijn conjugate"""


class DivergenceError(RuntimeError):
    """Raised when the de Bruijn fixed-point iteration does not settle"""

    def __init__(self, message: str, last_iterate: float):
        super().__init__(message)
        self.last_iterate = last_iterate


class KaramataSum(NamedTuple):
    total: float
    ratio: float


def _fmt(value: float) -> str:
    """Shortest exact text for a float (integers without the trailing .0)"""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class SlowlyVaryingFn:
    """
    L(x) = c * log(x)^g1 * log(log(x))^g2 with log(x) = ln(max{x, e}).

    On [0, ramp_threshold) the function is replaced by the linear ramp from
    0 to L(ramp_threshold) (see monotone_adjust). A user evaluator replaces
    the closed form entirely and has no analytic conjugate.
    """
    coefficient: float = 1.0
    log_power: float = 0.0
    loglog_power: float = 0.0
    ramp_threshold: float = 0.0
    evaluator: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ValueError(f"coefficient must be positive, got {self.coefficient}")
        if self.ramp_threshold < 0:
            raise ValueError("ramp_threshold must be nonnegative")

    # Construction helpers
    @classmethod
    def constant(cls, c: float = 1.0) -> "SlowlyVaryingFn":
        return cls(coefficient=c)

    @classmethod
    def log(cls, gamma: float = 1.0) -> "SlowlyVaryingFn":
        return cls(log_power=gamma)

    @classmethod
    def loglog(cls, gamma: float = 1.0) -> "SlowlyVaryingFn":
        return cls(loglog_power=gamma)

    @classmethod
    def custom(cls, evaluator: Callable, name: str = "custom") -> "SlowlyVaryingFn":
        return cls(evaluator=evaluator, name=name)

    @classmethod
    def parse(cls, text: str) -> "SlowlyVaryingFn":
        """Parse a descriptor such as "log^2 * loglog^-1" or "3*log^0.5" """
        if not text or not text.strip():
            raise ValueError("empty slowly varying descriptor")
        coefficient, g1, g2 = 1.0, 0.0, 0.0
        for raw in text.split("*"):
            factor = raw.strip().replace(" ", "")
            if not factor:
                raise ValueError(f"malformed descriptor: {text!r}")
            base, _, power = factor.partition("^")
            try:
                exponent = float(power) if power else 1.0
                if base == "log":
                    g1 += exponent
                elif base == "loglog":
                    g2 += exponent
                elif not power:
                    coefficient *= float(base)
                else:
                    raise ValueError
            except ValueError:
                raise ValueError(f"unknown factor {factor!r} in descriptor {text!r}") from None
        return cls(coefficient=coefficient, log_power=g1, loglog_power=g2)

    def describe(self) -> str:
        """Canonical descriptor text (inverse of parse)"""
        if self.evaluator is not None:
            return f"custom:{self.name}"
        parts = []
        if self.coefficient != 1.0 or (self.log_power == 0 and self.loglog_power == 0):
            parts.append(_fmt(self.coefficient))
        if self.log_power != 0:
            parts.append("log" if self.log_power == 1 else f"log^{_fmt(self.log_power)}")
        if self.loglog_power != 0:
            parts.append("loglog" if self.loglog_power == 1 else f"loglog^{_fmt(self.loglog_power)}")
        return " * ".join(parts)

    @property
    def kind(self) -> str:
        if self.evaluator is not None:
            return "custom"
        if self.log_power == 0 and self.loglog_power == 0:
            return "constant"
        if self.loglog_power == 0:
            return "log-power"
        if self.log_power == 0:
            return "loglog-power"
        return "product"

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def power(self, s: float) -> "SlowlyVaryingFn":
        """L^s, which stays inside the closed-form family"""
        if self.evaluator is not None:
            base = self.evaluator
            return SlowlyVaryingFn.custom(lambda x: base(x) ** s, name=f"{self.name}^{s}")
        return SlowlyVaryingFn(
            coefficient=self.coefficient ** s,
            log_power=self.log_power * s,
            loglog_power=self.loglog_power * s,
        )

    # Evaluation
    def _closed_form(self, x):
        if self.evaluator is not None:
            return np.asarray(self.evaluator(x), dtype=float)
        lx = np.log(np.maximum(x, E))
        llx = np.log(np.maximum(lx, E))
        return self.coefficient * lx ** self.log_power * llx ** self.loglog_power

    def __call__(self, x):
        """L(x) for x >= 0 (scalar or array)"""
        x = np.asarray(x, dtype=float)
        value = self._closed_form(x)
        if self.ramp_threshold > 0:
            a = self.ramp_threshold
            value = np.where(x < a, self._closed_form(a) * x / a, value)
        return float(value) if value.ndim == 0 else value

    def eval_log(self, u):
        """L(e^u), evaluated without forming e^u for the closed-form family"""
        u = np.asarray(u, dtype=float)
        if self.evaluator is not None:
            with np.errstate(over="raise"):
                return self(np.exp(u))
        lx = np.maximum(u, 1.0)
        llx = np.log(np.maximum(lx, E))
        value = self.coefficient * lx ** self.log_power * llx ** self.loglog_power
        if self.ramp_threshold > 0:
            a = self.ramp_threshold
            below = u < math.log(a)
            value = np.where(below, self._closed_form(a) * np.exp(np.minimum(u, math.log(a))) / a, value)
        return float(value) if value.ndim == 0 else value

    def derivative(self, x):
        """L'(x) under the max{x, e} convention (right derivative at the kinks)"""
        x = np.asarray(x, dtype=float)
        if self.evaluator is not None:
            h = 1e-6
            d = (self._closed_form(x * (1 + h)) - self._closed_form(x * (1 - h))) / (2 * h * np.maximum(x, 1e-300))
        else:
            lx = np.log(np.maximum(x, E))
            llx = np.log(np.maximum(lx, E))
            dlx = np.where(x > E, 1.0 / np.maximum(x, E), 0.0)
            dllx = np.where(lx > E, dlx / lx, 0.0)
            d = self._closed_form(x) * (self.log_power * dlx / lx + self.loglog_power * dllx / llx)
        if self.ramp_threshold > 0:
            a = self.ramp_threshold
            d = np.where(x < a, self._closed_form(a) / a, d)
        return float(d) if d.ndim == 0 else d

    def _raw_condition(self, x: np.ndarray, r: float) -> np.ndarray:
        """Positivity of L and of r*L + x*L' for the raw form (plain ln, no max{x, e})"""
        if self.evaluator is not None:
            value = self._closed_form(x)
            h = 1e-6
            slope = (self._closed_form(x * (1 + h)) - self._closed_form(x * (1 - h))) / (2 * h)
            return (value > 0) & (r * value + slope > 0)
        ok = np.ones_like(x, dtype=bool)
        if self.is_constant:
            return ok
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            score = np.full_like(x, r)
            if self.log_power != 0:
                ok &= lx > 0
                score = score + self.log_power / lx
            if self.loglog_power != 0:
                llx = np.log(lx)
                ok &= (lx > 0) & (llx > 0)
                score = score + self.loglog_power / (lx * llx)
            ok &= np.isfinite(score) & (score > 0)
        return ok


@lru_cache(maxsize=128)
def _ramp_threshold(fn: SlowlyVaryingFn, r: float) -> float:
    """Grid point following the last failure of the raw derivative condition"""
    if fn.is_constant:
        return 0.0
    step = config.SV_GRID_STEP
    total = int(round(config.SV_GRID_MAX / step))
    # A geometric pass brackets the last failure; only that bracket is scanned point by point
    coarse = np.unique(np.rint(np.geomspace(1, total, RAMP_COARSE_POINTS)).astype(np.int64))
    failing = np.flatnonzero(~fn._raw_condition(coarse * step, r))
    if not failing.size:
        return 0.0
    last = int(failing[-1])
    if coarse[last] == total:
        raise ValueError(f"{fn.describe()} is not eventually positive with x^{r}L(x) increasing")
    k = np.arange(coarse[last], coarse[last + 1] + 1, dtype=np.int64)
    fine = np.flatnonzero(~fn._raw_condition(k * step, r))
    return (int(k[fine[-1]]) + 1) * step


def monotone_adjust(L: SlowlyVaryingFn, r: float) -> SlowlyVaryingFn:
    """
    Regularize L so that x^r * L_1(x) is strictly increasing on [0, inf).

    L_1 equals L on [a, inf) and grows linearly from L_1(0) = 0 to L(a) on [0, a).
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    base = replace(L, ramp_threshold=0.0)
    return replace(base, ramp_threshold=_ramp_threshold(base, float(r)))


def de_bruijn_conjugate(L: SlowlyVaryingFn) -> SlowlyVaryingFn:
    """Analytic de Bruijn conjugate 1/L for the closed-form family"""
    if L.evaluator is not None:
        raise NoAnalyticConjugate(f"no analytic conjugate for {L.describe()}; use de_bruijn_numeric")
    return SlowlyVaryingFn(
        coefficient=1.0 / L.coefficient,
        log_power=-L.log_power,
        loglog_power=-L.loglog_power,
    )


def de_bruijn_numeric(L: SlowlyVaryingFn, x: float = None, tol: float = 1e-10, *,
                      log_x: Optional[float] = None) -> float:
    """
    Fixed point y = 1/L(x*y) by damped iteration from y_0 = 1/L(x).

    Stops when successive iterates differ by less than tol relative to the
    current iterate, so that |y*L(x*y) - 1| < 10*tol.
    """
    if log_x is None:
        if x is None or x < E:
            raise ValueError(f"x must be >= e, got {x}")
        log_x = math.log(x)
    elif log_x < 1.0:
        raise ValueError(f"log_x must be >= 1, got {log_x}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    damping = config.FIXED_POINT_DAMPING
    y = 1.0 / L.eval_log(log_x)
    for _ in range(config.FIXED_POINT_MAX_ITER):
        target = 1.0 / L.eval_log(log_x + math.log(y))
        step = damping * (target - y)
        y += step
        if abs(step) < tol * y:
            return y
    raise DivergenceError(f"fixed point did not converge for {L.describe()} at log x = {log_x}", y)


def karamata_sum(alpha: float, beta: float, L: SlowlyVaryingFn, n: int) -> KaramataSum:
    """sum_{k<=n} alpha^k L(beta^k) and its ratio to alpha^n L(beta^n), in log space"""
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = np.arange(1, n + 1, dtype=float)
    log_terms = k * math.log(alpha) + np.log(L.eval_log(k * math.log(beta)))
    log_total = float(logsumexp(log_terms))
    ratio = math.exp(log_total - log_terms[-1])
    total = math.exp(log_total) if log_total < 709.0 else math.inf
    return KaramataSum(total=total, ratio=ratio)
