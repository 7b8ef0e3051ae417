import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import integrate, optimize

from config import config
from slowly_varying import SlowlyVaryingFn, monotone_adjust

LOG_FLOAT_MAX = 700.0


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested tolerance"""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate {estimate!r}, error bound {error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


def _dyadic_panels(lo: float, hi: float) -> List[Tuple[float, float]]:
    """Split [lo, hi] at powers of two; hi may be inf"""
    edges = [lo]
    start = 1.0 if lo <= 0 else 2.0 ** math.floor(math.log2(lo))
    top = hi if math.isfinite(hi) else max(lo, 1.0) * 2.0 ** 8
    point = start
    while point < top and len(edges) < 200:
        if point > lo:
            edges.append(point)
        point *= 2.0
    edges.append(hi)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def integrate_panels(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Adaptive quadrature of f on [lo, hi] over dyadic panels"""
    total, error = 0.0, 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        for a, b in _dyadic_panels(lo, hi):
            value, err = integrate.quad(
                f, a, b,
                epsabs=config.QUAD_EPSABS, epsrel=config.QUAD_EPSREL, limit=200,
            )
            total += value
            error += err
    failed = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    if failed and error > max(config.QUAD_EPSABS, 1e-6 * abs(total)):
        raise QuadratureError("quadrature did not converge", total, error)
    return total


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class TailDistribution:
    """
    Law of a real random variable X specified through P(|X| > t).

    Subclasses give closed forms; moments default to integration by parts
    against the tail. All tails use the strict inequality |X| > t.
    """
    kind = "abstract"

    # Interface
    def tail(self, t):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def descriptor(self) -> Dict:
        raise NotImplementedError

    @property
    def symmetric(self) -> bool:
        return False

    @property
    def support_bound(self) -> float:
        """sup |X| (inf for unbounded laws)"""
        return math.inf

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.random(size))

    # Moments
    def truncated_moment(self, r: float, t: float) -> float:
        """E(|X|^r 1(|X| <= t)) = int_0^t r x^{r-1} (P(|X|>x) - P(|X|>t)) dx"""
        _check_moment_args(r, t)
        if t == 0:
            return 0.0
        tail_t = float(self.tail(t))
        return integrate_panels(lambda x: r * x ** (r - 1) * (float(self.tail(x)) - tail_t), 0.0, t)

    def upper_moment(self, r: float, t: float) -> float:
        """E(|X|^r 1(|X| > t)) = t^r P(|X|>t) + int_t^inf r x^{r-1} P(|X|>x) dx"""
        _check_moment_args(r, t)
        head = t ** r * float(self.tail(t))
        if t >= self.support_bound:
            return 0.0
        return head + integrate_panels(lambda x: r * x ** (r - 1) * float(self.tail(x)), t, self.support_bound)

    def moment(self, r: float) -> float:
        return self.upper_moment(r, 0.0)

    def signed_mean_below(self, t: float) -> float:
        """E(X 1(|X| <= t))"""
        if self.symmetric:
            return 0.0
        raise NotImplementedError

    def signed_mean_above(self, t: float) -> float:
        """E(X 1(|X| > t)); symmetric laws give 0 by symmetry"""
        if self.symmetric:
            return 0.0
        raise NotImplementedError

    def signed_means_below(self, ts) -> np.ndarray:
        """signed_mean_below over an array of levels"""
        ts = np.asarray(ts, dtype=float)
        if self.symmetric:
            return np.zeros_like(ts)
        return np.array([self.signed_mean_below(float(t)) for t in ts.ravel()]).reshape(ts.shape)

    def mean(self) -> float:
        if not math.isfinite(self.moment(1.0)):
            raise ValueError(f"{self.kind} law has no finite mean")
        return self.signed_mean_below(math.inf) if not self.symmetric else 0.0

    def transformed_upper_moment(self, g: Callable, dg: Callable, t: float) -> float:
        """E(g(|X|) 1(|X| > t)) for nondecreasing g with g(0) = 0"""
        head = float(g(t)) * float(self.tail(t))
        if t >= self.support_bound:
            return 0.0
        return head + integrate_panels(lambda x: float(dg(x)) * float(self.tail(x)), t, self.support_bound)

    # Log space
    def log_tail(self, u):
        """ln P(|X| > e^u)"""
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return _scalar(np.log(self.tail(np.exp(np.minimum(u, LOG_FLOAT_MAX)))))

    def log_truncated_moment(self, r: float, u: float) -> float:
        """ln E(|X|^r 1(|X| <= e^u))"""
        if u > LOG_FLOAT_MAX and self.support_bound < math.exp(LOG_FLOAT_MAX):
            u = LOG_FLOAT_MAX
        if u > LOG_FLOAT_MAX:
            raise OverflowError(f"no log-space truncated moment for {self.kind} at log t = {u}")
        value = self.truncated_moment(r, math.exp(u))
        return math.log(value) if value > 0 else -math.inf

    # Descriptors
    @staticmethod
    def from_descriptor(desc: Dict) -> "TailDistribution":
        """Build a distribution from its config descriptor"""
        if not isinstance(desc, dict) or "kind" not in desc:
            raise ValueError(f"distribution descriptor needs a 'kind': {desc!r}")
        kind = desc["kind"]
        builders = {
            "pareto": (ParetoTail, {"q", "c", "L0"}),
            "two_point": (TwoPoint, {"v", "mass"}),
            "rademacher": (TwoPoint, set()),
            "point_mass": (PointMass, {"c"}),
            "uniform": (UniformTail, {"v"}),
            "discrete": (DiscreteLaw, {"values", "probs"}),
        }
        if kind not in builders:
            raise ValueError(f"unknown distribution kind {kind!r}")
        cls, allowed = builders[kind]
        extra = set(desc) - allowed - {"kind"}
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)} for distribution kind {kind!r}")
        params = {k: v for k, v in desc.items() if k != "kind"}
        if kind == "rademacher":
            return TwoPoint.rademacher()
        if kind == "pareto":
            params["L0"] = SlowlyVaryingFn.parse(str(params.get("L0", "1")))
            return ParetoTail(**params)
        if kind == "discrete":
            return DiscreteLaw.from_lists(params["values"], params["probs"])
        return cls(**params)


def _check_moment_args(r: float, t: float):
    if r <= 0:
        raise ValueError(f"moment order must be positive, got {r}")
    if t < 0:
        raise ValueError(f"truncation level must be nonnegative, got {t}")


@dataclass(frozen=True)
class ParetoTail(TailDistribution):
    """Symmetric law with P(|X| > t) = min(1, c t^{-q} / L0(t))"""
    q: float = 1.0
    c: float = 1.0
    L0: SlowlyVaryingFn = field(default_factory=SlowlyVaryingFn.constant)
    kind = "pareto"

    def __post_init__(self):
        if self.q <= 0 or self.c <= 0:
            raise ValueError(f"pareto needs q > 0 and c > 0, got q={self.q}, c={self.c}")
        if not self.L0.is_constant and self.L0.ramp_threshold == 0:
            # t^q L0(t) must be increasing for the tail to be monotone
            object.__setattr__(self, "L0", monotone_adjust(self.L0, self.q))

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def plain(self) -> bool:
        """Tail is exactly c' t^{-q} beyond the unit-tail point"""
        return self.L0.is_constant

    @property
    def _c_eff(self) -> float:
        return self.c / self.L0.coefficient if self.plain else self.c

    @property
    def unit_point(self) -> float:
        """t0 with P(|X| > t) = 1 for t < t0"""
        return float(self._inverse_tail(np.asarray(1.0)))

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            value = np.minimum(1.0, self.c * np.power(np.maximum(t, 0.0), -self.q) / np.asarray(self.L0(t)))
        return _scalar(np.where(t <= 0, 1.0, value))

    def log_tail(self, u):
        u = np.asarray(u, dtype=float)
        value = math.log(self.c) - self.q * u - np.log(self.L0.eval_log(u))
        return _scalar(np.minimum(0.0, value))

    def _inverse_tail(self, s):
        """Smallest t with P(|X| > t) <= s, for s in (0, 1]"""
        s = np.asarray(s, dtype=float)
        if self.plain:
            return (self._c_eff / s) ** (1.0 / self.q)
        target = np.log(self.c / s)
        L0 = self.L0

        def h(v, target):
            return self.q * v + np.log(L0.eval_log(v)) - target

        def dh(v, target):
            x = np.exp(v)
            return self.q + x * L0.derivative(x) / L0.eval_log(v)

        if target.ndim == 0:
            v0 = float(target) / self.q
            lo, hi = v0 - 1.0, v0 + 1.0
            while h(lo, target) > 0:
                lo -= 2.0 * (abs(lo) + 1.0)
            while h(hi, target) < 0:
                hi += 2.0 * (abs(hi) + 1.0)
            return math.exp(optimize.brentq(h, lo, hi, args=(float(target),), xtol=1e-14, rtol=1e-14))
        v = optimize.newton(h, target / self.q, fprime=dh, args=(target,), tol=1e-12, maxiter=100)
        return np.exp(v)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        s = np.where(u < 0.5, 2.0 * u, 2.0 * (1.0 - u))
        magnitude = self._inverse_tail(np.clip(s, 1e-300, 1.0))
        return _scalar(np.where(u < 0.5, -magnitude, magnitude))

    def truncated_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        if not self.plain:
            t0 = self.unit_point
            if t <= t0:
                return 0.0
            tail_t = float(self.tail(t))
            head = t0 ** r * (1.0 - tail_t)
            return head + integrate_panels(lambda x: r * x ** (r - 1) * (float(self.tail(x)) - tail_t), t0, t)
        t0, c = self.unit_point, self._c_eff
        if t <= t0:
            return 0.0
        if r == self.q:
            return self.q * c * math.log(t / t0)
        return self.q / (r - self.q) * (c * t ** (r - self.q) - t0 ** r)

    def upper_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        if r >= self.q:
            return math.inf
        if not self.plain:
            return super().upper_moment(r, t)
        c = self._c_eff
        t_eff = max(t, self.unit_point)
        return c * self.q * t_eff ** (r - self.q) / (self.q - r)

    def mean(self) -> float:
        if self.q <= 1:
            raise ValueError(f"pareto with q = {self.q} has no finite mean")
        return 0.0

    def log_truncated_moment(self, r: float, u: float) -> float:
        if not self.plain:
            return super().log_truncated_moment(r, u)
        _check_moment_args(r, 0.0)
        t0, c, q = self.unit_point, self._c_eff, self.q
        if u <= math.log(t0):
            return -math.inf
        if r == q:
            return math.log(q * c) + math.log(u - math.log(t0))
        if r > q:
            return (math.log(q / (r - q)) + math.log(c) + (r - q) * u
                    + math.log1p(-(t0 ** r) * math.exp(-(r - q) * u) / c))
        return math.log(q / (q - r)) + math.log(t0 ** r - c * math.exp((r - q) * u))

    def descriptor(self) -> Dict:
        base = replace(self.L0, ramp_threshold=0.0)
        return {"kind": "pareto", "q": self.q, "c": self.c, "L0": base.describe()}


@dataclass(frozen=True)
class TwoPoint(TailDistribution):
    """X = +-v with probability mass/2 each, X = 0 otherwise"""
    v: float = 1.0
    mass: float = 1.0
    label: str = "two_point"
    kind = "two_point"

    def __post_init__(self):
        if self.v <= 0 or not 0 < self.mass <= 1:
            raise ValueError(f"two_point needs v > 0 and mass in (0, 1], got v={self.v}, mass={self.mass}")

    @classmethod
    def rademacher(cls) -> "TwoPoint":
        return cls(v=1.0, mass=1.0, label="rademacher")

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def support_bound(self) -> float:
        return self.v

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        return _scalar(np.where(t < self.v, self.mass, 0.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        half = self.mass / 2.0
        return _scalar(np.where(u < half, -self.v, np.where(u >= 1.0 - half, self.v, 0.0)))

    def truncated_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return self.mass * self.v ** r if self.v <= t else 0.0

    def upper_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return self.mass * self.v ** r if self.v > t else 0.0

    def transformed_upper_moment(self, g: Callable, dg: Callable, t: float) -> float:
        return self.mass * float(g(self.v)) if self.v > t else 0.0

    def mean(self) -> float:
        return 0.0

    def descriptor(self) -> Dict:
        if self.label == "rademacher":
            return {"kind": "rademacher"}
        return {"kind": "two_point", "v": self.v, "mass": self.mass}


@dataclass(frozen=True)
class PointMass(TailDistribution):
    """X = c surely"""
    c: float = 0.0
    kind = "point_mass"

    @property
    def symmetric(self) -> bool:
        return self.c == 0

    @property
    def support_bound(self) -> float:
        return abs(self.c)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        return _scalar(np.where(t < abs(self.c), 1.0, 0.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return _scalar(np.full_like(u, self.c))

    def truncated_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return abs(self.c) ** r if abs(self.c) <= t else 0.0

    def upper_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return abs(self.c) ** r if abs(self.c) > t else 0.0

    def transformed_upper_moment(self, g: Callable, dg: Callable, t: float) -> float:
        return float(g(abs(self.c))) if abs(self.c) > t else 0.0

    def signed_mean_below(self, t: float) -> float:
        return self.c if abs(self.c) <= t else 0.0

    def signed_mean_above(self, t: float) -> float:
        return self.c if abs(self.c) > t else 0.0

    def mean(self) -> float:
        return self.c

    def descriptor(self) -> Dict:
        return {"kind": "point_mass", "c": self.c}


@dataclass(frozen=True)
class UniformTail(TailDistribution):
    """X uniform on [-v, v]"""
    v: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if self.v <= 0:
            raise ValueError(f"uniform needs v > 0, got {self.v}")

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def support_bound(self) -> float:
        return self.v

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        return _scalar(np.clip(1.0 - t / self.v, 0.0, 1.0))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return _scalar(self.v * (2.0 * u - 1.0))

    def truncated_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return min(t, self.v) ** (r + 1) / ((r + 1) * self.v)

    def upper_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        return (self.v ** (r + 1) - min(t, self.v) ** (r + 1)) / ((r + 1) * self.v)

    def mean(self) -> float:
        return 0.0

    def descriptor(self) -> Dict:
        return {"kind": "uniform", "v": self.v}


@dataclass(frozen=True)
class DiscreteLaw(TailDistribution):
    """Finite law: X = values[k] with probability probs[k]"""
    values: Tuple[float, ...] = (0.0,)
    probs: Tuple[float, ...] = (1.0,)
    kind = "discrete"

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("discrete law needs matching, nonempty values and probs")
        probs = np.asarray(self.probs, dtype=float)
        if np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("discrete probabilities must be nonnegative and sum to 1")
        order = np.argsort(self.values, kind="stable")
        object.__setattr__(self, "_sorted", np.asarray(self.values, dtype=float)[order])
        object.__setattr__(self, "_cum", np.cumsum(probs[order]))

    @classmethod
    def from_lists(cls, values, probs) -> "DiscreteLaw":
        return cls(values=tuple(float(v) for v in values), probs=tuple(float(p) for p in probs))

    @classmethod
    def uniform_over(cls, values) -> "DiscreteLaw":
        values = [float(v) for v in values]
        return cls(values=tuple(values), probs=tuple([1.0 / len(values)] * len(values)))

    @property
    def _abs(self) -> np.ndarray:
        return np.abs(np.asarray(self.values, dtype=float))

    @property
    def _p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def symmetric(self) -> bool:
        values, probs = np.asarray(self.values, dtype=float), self._p
        mirrored = {}
        for v, p in zip(values, probs):
            mirrored[v] = mirrored.get(v, 0.0) + p
        return all(math.isclose(p, mirrored.get(-v, 0.0), abs_tol=1e-15) for v, p in mirrored.items())

    @property
    def support_bound(self) -> float:
        return float(self._abs.max())

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        above = self._abs[None, :] > np.atleast_1d(t)[:, None]
        value = (above * self._p[None, :]).sum(axis=1)
        return _scalar(value.reshape(t.shape))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        index = np.minimum(np.searchsorted(self._cum, u, side="right"), len(self._sorted) - 1)
        return _scalar(self._sorted[index])

    def truncated_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        keep = self._abs <= t
        return float(np.sum(self._abs[keep] ** r * self._p[keep]))

    def upper_moment(self, r: float, t: float) -> float:
        _check_moment_args(r, t)
        keep = self._abs > t
        return float(np.sum(self._abs[keep] ** r * self._p[keep]))

    def transformed_upper_moment(self, g: Callable, dg: Callable, t: float) -> float:
        keep = self._abs > t
        return float(np.sum(np.asarray(g(self._abs[keep]), dtype=float) * self._p[keep]))

    def signed_mean_below(self, t: float) -> float:
        keep = self._abs <= t
        return float(np.sum(np.asarray(self.values, dtype=float)[keep] * self._p[keep]))

    def signed_mean_above(self, t: float) -> float:
        keep = self._abs > t
        return float(np.sum(np.asarray(self.values, dtype=float)[keep] * self._p[keep]))

    def signed_means_below(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        order = np.argsort(self._abs, kind="stable")
        levels = self._abs[order]
        cumulative = np.concatenate([[0.0], np.cumsum((np.asarray(self.values, dtype=float) * self._p)[order])])
        return cumulative[np.searchsorted(levels, ts, side="right")]

    def mean(self) -> float:
        return float(np.sum(np.asarray(self.values, dtype=float) * self._p))

    def descriptor(self) -> Dict:
        return {"kind": "discrete", "values": list(self.values), "probs": list(self.probs)}


def tail(d: TailDistribution, t: float) -> float:
    """P(|X| > t)"""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    return float(d.tail(t))


def truncated_moment(d: TailDistribution, r: float, t: float) -> float:
    """E(|X|^r 1(|X| <= t))"""
    return d.truncated_moment(r, t)
