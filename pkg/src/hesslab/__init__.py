"""Numerical toolkit for m-subharmonic functions, their slices and their Lelong numbers."""

from .catalog import TestFunction, lookup
from .errors import (
    DimensionError,
    EstimatorError,
    HesslabError,
    HessianError,
    InconclusiveError,
    ParameterError,
    SingularPointError,
)
from .integrate import EstimatorConfig, MassEstimate

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "EstimatorConfig",
    "EstimatorError",
    "HesslabError",
    "HessianError",
    "InconclusiveError",
    "MassEstimate",
    "ParameterError",
    "SingularPointError",
    "TestFunction",
    "lookup",
    "__version__",
]
