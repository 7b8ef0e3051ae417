"""
Dyadic diagnostics package - block decomposition of maximal sums, lambda
thresholds, K_m and bound sequences, and the coupled dyadic reduction check
"""

from .bounds import BoundSequences, KmSequence, bound_sequences, km_sequence
from .decomposition import (
    DyadicDecomposition,
    c1,
    check_ab,
    decompose_path,
    default_ab,
    lambda_sum_check,
    lambda_threshold,
)
from .reduction import DyadicReduction, ReductionEstimate, dyadic_reduction_check, dyadic_scale

__all__ = [
    'DyadicDecomposition', 'KmSequence', 'BoundSequences', 'DyadicReduction', 'ReductionEstimate',
    'decompose_path', 'km_sequence', 'bound_sequences', 'lambda_threshold', 'lambda_sum_check',
    'default_ab', 'check_ab', 'c1', 'dyadic_reduction_check', 'dyadic_scale',
]
