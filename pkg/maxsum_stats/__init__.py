"""
Maxsum stats package - maximal partial-sum statistics, exact tail sums and
Monte Carlo convergence estimates with Wilson intervals
"""

from .convergence import (
    CONVERGES,
    DIVERGES,
    INCONCLUSIVE,
    ConvergenceEstimate,
    StatisticResult,
    verdict,
    wilson_interval,
)
from .engine import Campaign, MonteCarloEngine, estimate_convergence, run_chunked
from .statistics import (
    StatisticKind,
    centering,
    centering_drift,
    counterexample_max_prob,
    first_index_above,
    harmonic,
    restricted_tail_sums,
    statistic_value,
    tail_sum,
)

__all__ = [
    'StatisticKind', 'ConvergenceEstimate', 'StatisticResult', 'Campaign', 'MonteCarloEngine',
    'CONVERGES', 'DIVERGES', 'INCONCLUSIVE',
    'statistic_value', 'centering', 'centering_drift', 'tail_sum', 'restricted_tail_sums',
    'counterexample_max_prob', 'first_index_above', 'harmonic',
    'estimate_convergence', 'run_chunked', 'verdict', 'wilson_interval',
]
