"""
sandwichpy Utilities Package
Contains configuration, error handling, logging and output helpers.
"""

from .config import Config
from .errors import (
    SandwichError,
    ConfigError,
    ValidationError,
    RangeError,
    DomainError,
    UsageError,
    NoRootError,
    FitError,
)
from .fileio import OutputMetadata, format_csv, format_json
from .logger import SandwichLogger

__all__ = [
    'Config',
    'SandwichError',
    'ConfigError',
    'ValidationError',
    'RangeError',
    'DomainError',
    'UsageError',
    'NoRootError',
    'FitError',
    'OutputMetadata',
    'format_csv',
    'format_json',
    'SandwichLogger',
]
