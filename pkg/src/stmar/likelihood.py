"""
Log-likelihood, information criteria and parameter admissibility checks.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ar_core import STATIONARITY_MARGIN, check_stationarity
from .exceptions import DomainError
from .model import _log_cond_density_batch, lag_matrix, log_stationary_density

__all__ = [
    "LoglikReport",
    "cond_loglik",
    "exact_loglik",
    "loglik",
    "info_criteria",
    "validate",
]


@dataclass(frozen=True)
class LoglikReport:
    """Result of a likelihood evaluation.

    ``scaled_loglik`` is ``sum_loglik / effective_T``. For the exact
    likelihood ``sum_loglik`` includes ``initial_term``.
    """

    sum_loglik: float
    scaled_loglik: float
    per_obs: np.ndarray
    effective_T: int
    initial_term: Optional[float] = None


def _check_data(data, p):
    data = np.asarray(data, dtype=float)
    if data.ndim != 1:
        raise ValueError("data must be one-dimensional")
    if data.size < p + 1:
        raise ValueError(f"need at least p + 1 = {p + 1} observations, got {data.size}")
    if not np.all(np.isfinite(data)):
        bad = np.flatnonzero(~np.isfinite(data))[0]
        raise DomainError(f"data contains a non-finite value at index {bad}")
    return data


def _pairwise_sum(x):
    # np.add.reduce on contiguous float arrays uses pairwise summation
    return float(np.add.reduce(np.ascontiguousarray(x)))


def per_obs_loglik(params, data):
    """The terms ``l_t`` for ``t = p, ..., T-1`` without validation."""
    p = params.p
    return _log_cond_density_batch(params, data[p:], lag_matrix(data, p))


def cond_loglik(params, data):
    """Log-likelihood conditional on the first ``p`` observations."""
    data = _check_data(data, params.p)
    per_obs = per_obs_loglik(params, data)
    total = _pairwise_sum(per_obs)
    n = per_obs.size
    return LoglikReport(total, total / n, per_obs, n)


def exact_loglik(params, data):
    """Log-likelihood with the first ``p`` observations drawn from the stationary law."""
    cond = cond_loglik(params, data)
    y0 = np.asarray(data, dtype=float)[: params.p][::-1]
    init = float(log_stationary_density(params, y0))
    total = cond.sum_loglik + init
    return LoglikReport(total, total / cond.effective_T, cond.per_obs, cond.effective_T, init)


def loglik(params, data, exact=False):
    return exact_loglik(params, data) if exact else cond_loglik(params, data)


def info_criteria(sum_loglik, k, effective_T):
    """AIC, HQC and BIC as a tuple.

    ``effective_T`` is the number of conditional likelihood terms
    (``T_total - p``), which is what the sample size means here.
    """
    if effective_T < 3:
        raise ValueError("effective_T must be at least 3")
    base = -2.0 * sum_loglik
    aic = base + 2.0 * k
    hqc = base + 2.0 * k * np.log(np.log(effective_T))
    bic = base + k * np.log(effective_T)
    return float(aic), float(hqc), float(bic)


def validate(params, margin=STATIONARITY_MARGIN):
    """List every violated admissibility constraint; empty iff admissible."""
    problems = []
    for m, c in enumerate(params.components, start=1):
        if not np.all(np.isfinite(c.as_vector())):
            problems.append(f"component {m}: non-finite parameter")
            continue
        if not c.sigma2 > 0:
            problems.append(f"component {m}: sigma2={c.sigma2} must be positive")
        if not c.nu > 2:
            problems.append(f"component {m}: nu={c.nu} must exceed 2")
        if not check_stationarity(c.phi, margin):
            problems.append(f"component {m}: phi={c.phi.tolist()} is not stationary")
    a = params.alphas
    if params.M == 1:
        if a[0] != 1.0:
            problems.append(f"alpha_1={a[0]} must equal 1 for a single component")
    else:
        if np.any(~(a > 0)) or np.any(~(a < 1)):
            problems.append(f"alphas={a.tolist()} must lie in (0, 1)")
        if abs(a.sum() - 1.0) > 1e-12:
            problems.append(f"alphas sum to {a.sum()}, not 1")
        if np.any(np.diff(a) >= 0):
            problems.append(f"alphas={a.tolist()} are not strictly decreasing")
        vecs = [c.as_vector() for c in params.components]
        for i in range(params.M):
            for j in range(i + 1, params.M):
                if np.array_equal(vecs[i], vecs[j]):
                    problems.append(f"components {i + 1} and {j + 1} are identical")
    return problems
