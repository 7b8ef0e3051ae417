"""
Generators package - reproducible random streams, sequence models and
structural checks (pairwise independence, variance inequality)
"""

from .checks import (
    PairwiseReport,
    VarianceCheck,
    joffe_variance_ratio,
    parse_transform,
    variance_inequality_check,
    variance_profile,
    verify_not_mutually_independent,
    verify_pairwise_independence,
)
from .models import (
    AntitheticModel,
    CounterexampleModel,
    IidModel,
    JoffeModel,
    MarkovModel,
    SequenceModel,
    generate,
    is_prime,
    markov_variance_ratio,
)
from .streams import RngStream

__all__ = [
    'RngStream', 'SequenceModel', 'IidModel', 'JoffeModel', 'CounterexampleModel',
    'MarkovModel', 'AntitheticModel', 'PairwiseReport', 'VarianceCheck',
    'generate', 'is_prime', 'markov_variance_ratio', 'parse_transform',
    'verify_pairwise_independence', 'verify_not_mutually_independent',
    'variance_inequality_check', 'variance_profile', 'joffe_variance_ratio',
]
