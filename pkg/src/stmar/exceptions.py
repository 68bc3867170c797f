"""Exception types raised by the package."""

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain of the requested operation."""


class FactorizationError(np.linalg.LinAlgError):
    """A matrix that must be symmetric positive definite is not."""


class ConditioningError(np.linalg.LinAlgError):
    """A linear system is too close to singular to be solved reliably."""


class RankDeficiencyError(np.linalg.LinAlgError):
    """A least-squares design matrix does not have full column rank."""


class IngestionError(ValueError):
    """A data file could not be parsed."""


class EstimationError(RuntimeError):
    """No estimation start produced a finite likelihood.

    The ``diagnostics`` attribute carries whatever was recorded per start.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics if diagnostics is not None else {}
