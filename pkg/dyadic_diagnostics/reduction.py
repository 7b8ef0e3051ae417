import asyncio
from dataclasses import dataclass

import numpy as np

from config import config
from generators import RngStream, SequenceModel, generate
from maxsum_stats import ConvergenceEstimate, StatisticKind, centering, run_chunked, statistic_value
from slowly_varying import Normalizer


@dataclass
class ReductionEstimate:
    """Coupled estimates of the statistic at n and its dyadic counterpart at 2^m"""
    n: int
    m: int
    eps: float
    direct: ConvergenceEstimate
    dyadic: ConvergenceEstimate

    @property
    def gap(self) -> float:
        return self.direct.p_hat - self.dyadic.p_hat

    @property
    def joint_half_width(self) -> float:
        return ((self.direct.ci_high - self.direct.ci_low) + (self.dyadic.ci_high - self.dyadic.ci_low)) / 2.0

    @property
    def consistent(self) -> bool:
        return abs(self.gap) <= self.joint_half_width


def dyadic_scale(n: int) -> int:
    """m with 2^{m-1} <= n < 2^m"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return int(n).bit_length()


class DyadicReduction:
    """
    Each replication draws one path of length 2^m - 1. The statistic at n uses
    the prefix X_1..X_n with level b_n. The dyadic statistic uses the whole
    path at level b_{2^m}; for the truncated-mean kinds it is evaluated on
    X_{i,2^m} = X_i 1(|X_i| <= b_{2^m}), so both sides are truncated sums.
    """

    def __init__(self, model: SequenceModel, kind, norm: Normalizer, n: int, eps: float, reps: int, seed: int,
                 threads: int = None):
        if reps < config.MIN_REPS:
            raise ValueError(f"reps must be >= {config.MIN_REPS}, got {reps}")
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.model = model
        self.family = model.family()
        self.kind = StatisticKind.parse(kind)
        self.norm = norm if norm.rule == self.kind.rule else Normalizer(norm.p, norm.L, self.kind.rule)
        self.n = n
        self.m = dyadic_scale(n)
        self.eps = eps
        self.reps = reps
        self.seed = seed
        self.threads = threads
        self.length = 2 ** self.m - 1
        self.b_dyadic = float(self.norm.dyadic(self.m))
        self._center_n = centering(self.kind, self.family, n, self.norm.value(n))
        self._center_dyadic = centering(self.kind, self.family, self.length, self.b_dyadic)
        self._stream = RngStream(seed)

    def dyadic_statistic(self, path: np.ndarray) -> float:
        """Statistic of the full 2^m - 1 path at level b_{2^m}"""
        path = np.asarray(path, dtype=float)
        if self.kind.truncated_centering:
            path = np.where(np.abs(path) <= self.b_dyadic, path, 0.0)
        return statistic_value(self.kind, path, self.family, self.norm, center=self._center_dyadic, b_n=self.b_dyadic)

    def replicate(self, r: int) -> np.ndarray:
        path = generate(self.model, self.length, self._stream.spawn(r))
        direct = statistic_value(self.kind, path[: self.n], self.family, self.norm, center=self._center_n)
        return np.array([direct, self.dyadic_statistic(path)])

    async def run(self) -> ReductionEstimate:
        values = await run_chunked(self.replicate, self.reps, self.threads)
        exceed = (values > self.eps).sum(axis=0)
        return ReductionEstimate(
            n=self.n,
            m=self.m,
            eps=self.eps,
            direct=ConvergenceEstimate.from_counts(self.n, self.eps, int(exceed[0]), self.reps),
            dyadic=ConvergenceEstimate.from_counts(2 ** self.m, self.eps, int(exceed[1]), self.reps),
        )


def dyadic_reduction_check(model: SequenceModel, kind, norm: Normalizer, n: int, eps: float, reps: int,
                           seed: int, threads: int = None) -> ReductionEstimate:
    """Coupled Monte Carlo comparison of the statistic at n and at the enclosing dyadic scale"""
    return asyncio.run(DyadicReduction(model, kind, norm, n, eps, reps, seed, threads).run())
