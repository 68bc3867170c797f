"""Student's t mixture autoregressive (StMAR) models."""

from .ar_core import ComponentParams
from .estimator import FitConfig, FitResult, fit
from .likelihood import cond_loglik, exact_loglik, info_criteria, validate
from .model import StmarParams, canonicalize
from .mvt import MvtDistribution

__all__ = [
    "ComponentParams",
    "StmarParams",
    "MvtDistribution",
    "FitConfig",
    "FitResult",
    "fit",
    "cond_loglik",
    "exact_loglik",
    "info_criteria",
    "validate",
    "canonicalize",
]

__version__ = "0.1.0"
