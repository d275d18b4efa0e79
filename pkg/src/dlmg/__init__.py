"""Dissipative Lipkin-Meshkov-Glick model: exact spin numerics and large-S analytics."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    CriticalPointError,
    CutoffError,
    DlmgError,
    InvalidParameterError,
    SectorMixingError,
    TooLargeError,
    UnsupportedRegimeError,
)
from .lmg_model import ModelParams

__all__ = [
    "ConvergenceError",
    "CriticalPointError",
    "CutoffError",
    "DlmgError",
    "InvalidParameterError",
    "ModelParams",
    "SectorMixingError",
    "TooLargeError",
    "UnsupportedRegimeError",
    "__version__",
]
