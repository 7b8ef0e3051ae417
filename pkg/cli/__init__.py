"""
CLI package - experiment configs and presets, per-kind handlers and console
messages for the batch runner
"""

from .experiment import (
    KINDS,
    PRESETS,
    ConfigError,
    ExperimentConfig,
    load_config,
    load_preset,
    write_presets,
)
from .handlers import ExperimentHandlers
from .messages import RunMessages

__all__ = [
    'ExperimentConfig', 'ConfigError', 'ExperimentHandlers', 'RunMessages',
    'KINDS', 'PRESETS', 'load_config', 'load_preset', 'write_presets',
]
