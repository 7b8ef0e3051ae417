import asyncio
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import config
from generators import RngStream, SequenceModel, generate
from slowly_varying import Normalizer
from .convergence import ConvergenceEstimate, StatisticResult, verdict
from .statistics import StatisticKind, centering, statistic_value


@dataclass
class Campaign:
    """All estimates of one Monte Carlo run (shared paths across kinds and eps)"""
    model_hash: str
    seed: int
    reps: int
    n_grid: List[int]
    results: List[StatisticResult] = field(default_factory=list)

    def result(self, kind: Union[str, StatisticKind], eps: float) -> StatisticResult:
        name = StatisticKind.parse(kind).value
        for res in self.results:
            if res.kind == name and res.eps == eps:
                return res
        raise KeyError(f"no result for {name} at eps = {eps}")

    def verdicts(self) -> Dict[str, str]:
        return {f"{res.kind}@{res.eps:g}": res.verdict for res in self.results}


async def run_chunked(replicate: Callable[[int], np.ndarray], reps: int,
                      threads: int = None, chunk_reps: int = None) -> np.ndarray:
    """
    Evaluate replicate(r) for r = 0..reps-1 in fixed-size chunks on worker
    threads and stack the results in replication order.
    """
    threads = threads or config.THREADS
    chunk_reps = chunk_reps or config.CHUNK_REPS
    semaphore = asyncio.Semaphore(threads)

    def run_chunk(start: int, stop: int) -> np.ndarray:
        return np.stack([replicate(r) for r in range(start, stop)])

    async def worker(start: int, stop: int) -> np.ndarray:
        async with semaphore:
            return await asyncio.to_thread(run_chunk, start, stop)

    bounds = [(s, min(s + chunk_reps, reps)) for s in range(0, reps, chunk_reps)]
    chunks = await asyncio.gather(*(worker(s, e) for s, e in bounds))
    return np.concatenate(chunks, axis=0)


def _validate_grid(n_grid: Sequence[int]) -> List[int]:
    grid = [int(n) for n in n_grid]
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"n_grid must be strictly increasing positive integers, got {list(n_grid)}")
    return grid


class MonteCarloEngine:
    """
    Replication r draws one path of length max(n_grid) from stream (seed, r)
    and evaluates every statistic on every prefix. Chunks of replications run
    in worker threads; results are merged in replication order, so output
    does not depend on the thread count.
    """

    def __init__(self, model: SequenceModel, norm: Normalizer, kinds: Sequence, n_grid: Sequence[int],
                 eps: Sequence[float], reps: int, seed: int,
                 threads: Optional[int] = None, chunk_reps: Optional[int] = None):
        if reps < config.MIN_REPS:
            raise ValueError(f"reps must be >= {config.MIN_REPS}, got {reps}")
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("eps values must be positive")
        self.model = model
        self.family = model.family()
        self.kinds = [StatisticKind.parse(k) for k in kinds]
        self.n_grid = _validate_grid(n_grid)
        self.eps = [float(e) for e in eps]
        self.reps = reps
        self.seed = seed
        self.threads = threads or config.THREADS
        self.chunk_reps = chunk_reps or config.CHUNK_REPS
        self.base_stream = RngStream(seed)
        self.norms = {
            kind: norm if norm.rule == kind.rule else Normalizer(norm.p, norm.L, kind.rule)
            for kind in self.kinds
        }
        # centering constants come from the exact marginals, never from samples
        self._centers: Dict[Tuple[StatisticKind, int], np.ndarray] = {}
        for kind in self.kinds:
            for n in self.n_grid:
                b_n = self.norms[kind].value(n)
                self._centers[(kind, n)] = centering(kind, self.family, n, b_n)

    def replicate(self, r: int) -> np.ndarray:
        """Statistic values of replication r, shape (kinds, grid)"""
        path = generate(self.model, self.n_grid[-1], self.base_stream.spawn(r))
        out = np.empty((len(self.kinds), len(self.n_grid)))
        for a, kind in enumerate(self.kinds):
            for b, n in enumerate(self.n_grid):
                out[a, b] = statistic_value(
                    kind, path[:n], self.family, self.norms[kind], center=self._centers[(kind, n)]
                )
        return out

    async def run(self, converge_upper: float = None, diverge_lower: float = None) -> Campaign:
        values = await run_chunked(self.replicate, self.reps, self.threads, self.chunk_reps)
        campaign = Campaign(
            model_hash=self.model.model_hash(),
            seed=self.seed,
            reps=self.reps,
            n_grid=list(self.n_grid),
        )
        medians = np.median(values, axis=0)
        for a, kind in enumerate(self.kinds):
            for eps in self.eps:
                exceed = (values[:, a, :] > eps).sum(axis=0)
                estimates = [
                    ConvergenceEstimate.from_counts(n, eps, int(k), self.reps)
                    for n, k in zip(self.n_grid, exceed)
                ]
                campaign.results.append(StatisticResult(
                    kind=kind.value,
                    eps=eps,
                    estimates=estimates,
                    verdict=verdict(estimates, converge_upper, diverge_lower),
                    medians=[float(m) for m in medians[a]],
                ))
        return campaign


def estimate_convergence(model: SequenceModel, kind, norm: Normalizer, n_grid: Sequence[int], eps: float,
                         reps: int, seed: int, threads: int = None) -> Tuple[List[ConvergenceEstimate], str]:
    """Single-statistic campaign: estimates across n_grid and the verdict"""
    engine = MonteCarloEngine(model, norm, [kind], n_grid, [eps], reps, seed, threads=threads)
    result = asyncio.run(engine.run()).results[0]
    return result.estimates, result.verdict
