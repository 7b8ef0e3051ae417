"""
Distributions package - tail-specified laws, varying families, envelopes,
the Gut condition and uniform-integrability checks
"""

from .families import (
    ComposeProfile,
    DominationRow,
    UnsupportedFamily,
    VaryingFamily,
    compose_check,
    compose_profile,
    domination_check,
    envelope,
    gut_condition,
    uniform_integrability_gap,
)
from .tails import (
    DiscreteLaw,
    ParetoTail,
    PointMass,
    QuadratureError,
    TailDistribution,
    TwoPoint,
    UniformTail,
    integrate_panels,
    tail,
    truncated_moment,
)

__all__ = [
    'TailDistribution', 'ParetoTail', 'TwoPoint', 'PointMass', 'UniformTail', 'DiscreteLaw',
    'VaryingFamily', 'ComposeProfile', 'DominationRow',
    'QuadratureError', 'UnsupportedFamily',
    'tail', 'truncated_moment', 'integrate_panels',
    'envelope', 'gut_condition', 'uniform_integrability_gap',
    'compose_check', 'compose_profile', 'domination_check',
]
