"""
Slowly varying package - closed-form slowly varying functions, regularization,
de Bruijn conjugates, normalizing sequences and Karamata sums
"""

from .functions import (
    DivergenceError,
    KaramataSum,
    NoAnalyticConjugate,
    SlowlyVaryingFn,
    de_bruijn_conjugate,
    de_bruijn_numeric,
    karamata_sum,
    monotone_adjust,
)
from .normalizer import Normalizer, normalizer_value

__all__ = [
    'SlowlyVaryingFn', 'Normalizer', 'KaramataSum',
    'NoAnalyticConjugate', 'DivergenceError',
    'monotone_adjust', 'de_bruijn_conjugate', 'de_bruijn_numeric',
    'karamata_sum', 'normalizer_value',
]
