import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Tuple

from scipy.stats import norm as normal

from config import config

Z_95 = float(normal.ppf(0.975))

CONVERGES = "converges"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p_hat * (1 - p_hat) / trials + z2 / (4 * trials * trials)) / denom
    low = min(max(0.0, center - half), p_hat)
    high = max(min(1.0, center + half), p_hat)
    return low, high


@dataclass
class ConvergenceEstimate:
    n: int
    eps: float
    p_hat: float
    ci_low: float
    ci_high: float
    reps: int

    @classmethod
    def from_counts(cls, n: int, eps: float, exceed: int, reps: int) -> "ConvergenceEstimate":
        low, high = wilson_interval(exceed, reps)
        return cls(n=n, eps=eps, p_hat=exceed / reps, ci_low=low, ci_high=high, reps=reps)

    def to_dict(self) -> Dict:
        return asdict(self)


def _no_significant_rise(tail: Sequence[ConvergenceEstimate]) -> bool:
    """p_hat non-increasing at Monte Carlo resolution: a later p_hat may tie up to the earlier upper CI"""
    return all(later.p_hat <= earlier.ci_high for earlier, later in zip(tail, tail[1:]))


def verdict(estimates: Sequence[ConvergenceEstimate],
            converge_upper: float = None, diverge_lower: float = None) -> str:
    """
    converges:    upper CI at the largest n below converge_upper and p_hat
                  non-increasing over the last three grid points, where a
                  rise that stays within the earlier Wilson interval is a tie
    diverges:     lower CI at the largest n above diverge_lower
    inconclusive: otherwise
    """
    if not estimates:
        return INCONCLUSIVE
    upper = config.CONVERGE_UPPER if converge_upper is None else converge_upper
    lower = config.DIVERGE_LOWER if diverge_lower is None else diverge_lower
    ordered = sorted(estimates, key=lambda e: e.n)
    last = ordered[-1]
    if last.ci_high < upper and _no_significant_rise(ordered[-3:]):
        return CONVERGES
    if last.ci_low > lower:
        return DIVERGES
    return INCONCLUSIVE


@dataclass
class StatisticResult:
    """Estimates of one statistic at one eps across the n-grid"""
    kind: str
    eps: float
    estimates: List[ConvergenceEstimate]
    verdict: str
    medians: List[float]

    def p_hats(self) -> List[float]:
        return [e.p_hat for e in self.estimates]
