"""
Multivariate Student's t distribution in the covariance parameterization.

A random vector ``X ~ t_d(mean, cov, dof)`` has ``E[X] = mean`` and
``Cov[X] = cov``; this requires ``dof > 2``. The usual scale matrix is
``cov * (dof - 2) / dof``. Everything is computed from a single Cholesky
factor of ``cov``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln

from .exceptions import DomainError, FactorizationError

__all__ = [
    "MvtDistribution",
    "log_density",
    "marginal",
    "conditional",
    "sample",
    "log_t1",
]


def _cholesky(a):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"matrix is not positive definite: {exc}") from None


@dataclass(frozen=True, eq=False)
class MvtDistribution:
    """A d-dimensional Student's t law with given mean, covariance and dof.

    Parameters
    ----------
    mean : array_like, shape (d,)
    cov : array_like, shape (d, d)
        Symmetric positive definite covariance matrix.
    dof : float
        Degrees of freedom, strictly greater than 2.
    """

    mean: np.ndarray
    cov: np.ndarray
    dof: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"mean of length {mean.size} does not match cov of shape {cov.shape}"
            )
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
            raise FactorizationError("cov is not symmetric")
        dof = float(self.dof)
        if not dof > 2:
            raise DomainError(f"dof must exceed 2, got {dof}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "dof", dof)
        # fail at construction, not at first use
        object.__setattr__(self, "chol", _cholesky(cov))

    @property
    def dim(self):
        return self.mean.size

    @cached_property
    def log_det_cov(self):
        return 2.0 * np.log(np.diag(self.chol)).sum()

    @cached_property
    def log_norm_const(self):
        d, nu = self.dim, self.dof
        return (
            gammaln(0.5 * (d + nu))
            - gammaln(0.5 * nu)
            - 0.5 * d * np.log(np.pi * (nu - 2.0))
            - 0.5 * self.log_det_cov
        )

    def mahalanobis2(self, x):
        """Squared Mahalanobis distance ``(x - mean)' cov^{-1} (x - mean)``.

        ``x`` may be a single point of shape (d,) or a batch of shape (n, d).
        """
        x = np.asarray(x, dtype=float)
        diff = (x - self.mean).reshape(-1, self.dim)
        w = solve_triangular(self.chol, diff.T, lower=True, check_finite=False)
        q = np.einsum("ij,ij->j", w, w)
        return q[0] if x.ndim == 1 else q

    def __repr__(self):
        return f"MvtDistribution(dim={self.dim}, dof={self.dof:g})"


def log_density(dist, x):
    """Log density of ``dist`` at ``x`` (a point, or an (n, d) batch)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dist.dim,) or x.ndim > 2:
        raise ValueError(f"expected points of dimension {dist.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    q = dist.mahalanobis2(x)
    return dist.log_norm_const - 0.5 * (dist.dim + dist.dof) * np.log1p(q / (dist.dof - 2.0))


def log_t1(y, mean, var, dof):
    """Vectorized univariate ``log t_1(y; mean, var, dof)``.

    No validation; used on hot paths where arguments are already known good.
    """
    z2 = (y - mean) ** 2 / var
    return (
        gammaln(0.5 * (dof + 1.0))
        - gammaln(0.5 * dof)
        - 0.5 * np.log(np.pi * (dof - 2.0) * var)
        - 0.5 * (dof + 1.0) * np.log1p(z2 / (dof - 2.0))
    )


def _check_indices(indices, dim):
    idx = np.atleast_1d(np.asarray(indices))
    if idx.size == 0:
        raise ValueError("index set must be nonempty")
    if not np.issubdtype(idx.dtype, np.integer):
        raise ValueError("indices must be integers")
    if idx.min() < 0 or idx.max() >= dim:
        raise ValueError(f"indices out of range for dimension {dim}")
    if np.unique(idx).size != idx.size:
        raise ValueError("indices must be distinct")
    return idx


def marginal(dist, indices):
    """Marginal law of the coordinates ``indices`` (0-based)."""
    idx = _check_indices(indices, dist.dim)
    return MvtDistribution(dist.mean[idx], dist.cov[np.ix_(idx, idx)], dist.dof)


def conditional(dist, cond_indices, x2):
    """Law of the remaining coordinates given ``X[cond_indices] = x2``.

    The result has ``dof + len(cond_indices)`` degrees of freedom and its
    covariance is scaled by ``(dof - 2 + q) / (dof - 2 + d2)`` where ``q`` is
    the Mahalanobis distance of ``x2`` under the conditioning marginal.
    """
    idx2 = _check_indices(cond_indices, dist.dim)
    if idx2.size == dist.dim:
        raise ValueError("conditioning set must be a proper subset")
    idx1 = np.setdiff1d(np.arange(dist.dim), idx2)
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x2.shape != idx2.shape:
        raise ValueError(f"x2 must have length {idx2.size}")
    if not np.all(np.isfinite(x2)):
        raise DomainError("x2 must be finite")

    g11 = dist.cov[np.ix_(idx1, idx1)]
    g12 = dist.cov[np.ix_(idx1, idx2)]
    g22 = dist.cov[np.ix_(idx2, idx2)]
    l22 = _cholesky(g22)
    d2 = idx2.size
    diff = x2 - dist.mean[idx2]
    w = cho_solve((l22, True), diff)
    q = diff @ w
    mean = dist.mean[idx1] + g12 @ w
    schur = g11 - g12 @ cho_solve((l22, True), g12.T)
    schur = 0.5 * (schur + schur.T)
    scale = (dist.dof - 2.0 + q) / (dist.dof - 2.0 + d2)
    return MvtDistribution(mean, scale * schur, dist.dof + d2)


def sample(dist, rng, n):
    """Draw ``n`` vectors from ``dist`` using ``rng`` (a numpy Generator).

    Uses the normal / chi-square compound: ``mean + Z / sqrt(W / dof)`` with
    ``Z ~ N(0, cov * (dof - 2) / dof)`` and ``W ~ chi2(dof)``. Returns an
    array of shape (n, d).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    nu = dist.dof
    z = rng.standard_normal((n, dist.dim)) @ dist.chol.T
    w = rng.chisquare(nu, size=n)
    return dist.mean + z * np.sqrt((nu - 2.0) / w)[:, None]
