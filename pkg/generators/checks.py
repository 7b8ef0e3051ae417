import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .models import JoffeModel, SequenceModel, generate
from .streams import RngStream

ENUMERATION_LIMIT = 101


@dataclass
class PairwiseReport:
    passed: bool
    max_deviation: Fraction
    pairs_checked: int


def _joffe_table(model: JoffeModel) -> np.ndarray:
    """W_i over all q^2 outcomes of (U, V): shape (q, q^2)"""
    if not isinstance(model, JoffeModel):
        raise TypeError(f"enumeration needs a joffe model, got {model.kind}")
    q = model.q
    if q > ENUMERATION_LIMIT:
        raise ValueError(f"q = {q} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    u, v = np.divmod(np.arange(q * q), q)
    return (u[None, :] + np.arange(q)[:, None] * v[None, :]) % q


def verify_pairwise_independence(model: JoffeModel) -> PairwiseReport:
    """Exact check that P(W_i = a, W_j = b) = 1/q^2 for every pair i != j"""
    table = _joffe_table(model)
    q = model.q
    worst = 0
    pairs = 0
    for i in range(q):
        for j in range(i + 1, q):
            counts = np.bincount(table[i] * q + table[j], minlength=q * q)
            worst = max(worst, int(np.abs(counts - 1).max()))
            pairs += 1
    deviation = Fraction(worst, q * q)
    return PairwiseReport(passed=worst == 0, max_deviation=deviation, pairs_checked=pairs)


def verify_not_mutually_independent(model: JoffeModel, triple=(0, 1, 2)) -> bool:
    """True when some cell of the joint law of (W_i, W_j, W_k) differs from 1/q^3"""
    table = _joffe_table(model)
    q = model.q
    if q < 3:
        return False
    i, j, k = triple
    counts = np.bincount((table[i] * q + table[j]) * q + table[k], minlength=q ** 3)
    target = Fraction(1, q ** 3)
    return any(Fraction(int(c), q * q) != target for c in np.unique(counts))


# Nondecreasing transforms
def _clip(level: float) -> Callable:
    return lambda x: np.clip(x, -level, level)


def _softplus(x):
    return np.logaddexp(0.0, x)


def parse_transform(name: str) -> Callable:
    """identity, softplus or clip:<level>"""
    if name == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if name == "softplus":
        return _softplus
    if name.startswith("clip:"):
        level = float(name.split(":", 1)[1])
        if level <= 0:
            raise ValueError("clip level must be positive")
        return _clip(level)
    raise ValueError(f"unknown transform {name!r}")


TransformArg = Union[str, Callable]


def _resolve(transforms: Union[TransformArg, Sequence[TransformArg]], ell: int) -> List[Callable]:
    if isinstance(transforms, (str,)) or callable(transforms):
        transforms = [transforms]
    resolved = [parse_transform(t) if isinstance(t, str) else t for t in transforms]
    return [resolved[i % len(resolved)] for i in range(ell)]


@dataclass
class VarianceCheck:
    """Monte Carlo estimate of var(sum f_i(X_i)) / sum var(f_i(X_i))"""
    ell: int
    offset: int
    reps: int
    ratio: float
    std_error: float
    numerator: float
    denominator: float
    degenerate: bool = False
    oracle: Optional[float] = None

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.ratio - target) <= sigmas * self.std_error


def _leave_one_out_variance(x: np.ndarray) -> np.ndarray:
    """Sample variances with each row left out in turn (axis 0 is replications)"""
    R = x.shape[0]
    total = x.sum(axis=0)
    squares = (x * x).sum(axis=0)
    rest_total = total - x
    rest_squares = squares - x * x
    return (rest_squares - rest_total ** 2 / (R - 1)) / (R - 2)


def variance_inequality_check(model: SequenceModel, transforms, k: int, ell: int, reps: int,
                              stream: RngStream) -> VarianceCheck:
    """Ratio estimate with a jackknife standard error; replication r uses stream index r"""
    if ell < 1:
        raise ValueError(f"block length must be >= 1, got {ell}")
    if k < 0:
        raise ValueError(f"offset must be nonnegative, got {k}")
    if reps < 3:
        raise ValueError("at least 3 replications are needed for a jackknife")
    fs = _resolve(transforms, ell)
    values = np.empty((reps, ell))
    for r in range(reps):
        path = generate(model, k + ell, stream.spawn(r))[k:]
        values[r] = [float(f(x)) for f, x in zip(fs, path)]

    sums = values.sum(axis=1)
    numerator = float(np.var(sums, ddof=1))
    denominator = float(np.var(values, axis=0, ddof=1).sum())
    if denominator <= 0:
        return VarianceCheck(ell, k, reps, math.nan, math.nan, numerator, denominator, degenerate=True)

    loo_num = _leave_one_out_variance(sums[:, None])[:, 0]
    loo_den = _leave_one_out_variance(values).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        loo_ratio = loo_num / loo_den
    loo_ratio = loo_ratio[np.isfinite(loo_ratio)]
    std_error = float(math.sqrt((reps - 1) / reps * np.sum((loo_ratio - loo_ratio.mean()) ** 2)))
    return VarianceCheck(ell, k, reps, numerator / denominator, std_error, numerator, denominator)


def variance_profile(model: SequenceModel, transforms, k: int, ells: Sequence[int], reps: int,
                     stream: RngStream) -> Dict[int, VarianceCheck]:
    """variance_inequality_check for several block lengths on the same streams"""
    return {ell: variance_inequality_check(model, transforms, k, ell, reps, stream) for ell in ells}


def joffe_variance_ratio(model: JoffeModel, transforms, k: int, ell: int) -> float:
    """Exact ratio for a single Joffe block by enumerating all (U, V)"""
    if k + ell > model.q:
        raise ValueError("offset plus block length must fit in one Joffe block")
    table = _joffe_table(model)
    fs = _resolve(transforms, ell)
    values = np.stack([np.asarray(fs[i](model.grid[table[k + i]]), dtype=float) for i in range(ell)])
    denominator = float(values.var(axis=1).sum())
    if denominator <= 0:
        return math.nan
    return float(values.sum(axis=0).var()) / denominator
