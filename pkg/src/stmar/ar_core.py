"""
Linear Student's t autoregressions.

A component with intercept ``phi0``, AR coefficients ``phi``, innovation
variance ``sigma2`` and degrees of freedom ``nu`` has the stationary law
``t_p(mu * 1, Gamma_p, nu)`` for p consecutive observations, and given the
lag vector ``z`` the next value is ``t_1(phi0 + phi'z, sigma2(z), nu + p)``
where ``sigma2(z)`` grows with the Mahalanobis distance of ``z``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from . import mvt
from .exceptions import ConditioningError, DomainError, FactorizationError

__all__ = [
    "ComponentParams",
    "ComponentStationary",
    "companion_matrix",
    "check_stationarity",
    "stationary_moments",
    "cond_mean_var",
    "simulate_star",
    "standard_t",
]

STATIONARITY_MARGIN = 1e-10
_MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class ComponentParams:
    """Parameters of one linear t autoregression.

    Construction only checks shapes; admissibility (stationarity, positive
    variance, ``nu > 2``) is enforced by :func:`stationary_moments`.
    """

    phi0: float
    phi: np.ndarray
    sigma2: float
    nu: float

    def __post_init__(self):
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float)).copy()
        if phi.ndim != 1 or phi.size == 0:
            raise ValueError("phi must be a nonempty vector")
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi0", float(self.phi0))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def p(self):
        return self.phi.size

    def as_vector(self):
        """``(phi0, phi_1, ..., phi_p, sigma2, nu)``."""
        return np.concatenate([[self.phi0], self.phi, [self.sigma2, self.nu]])

    def __eq__(self, other):
        if not isinstance(other, ComponentParams):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.as_vector(), other.as_vector())

    def __hash__(self):
        return hash(self.as_vector().tobytes())


@dataclass(frozen=True, eq=False)
class ComponentStationary:
    """Stationary moments of a component, computed by :func:`stationary_moments`."""

    params: ComponentParams
    mu: float
    gamma_p_matrix: np.ndarray
    gamma0: float
    gamma_p_vector: np.ndarray
    gamma_pplus1: np.ndarray

    @property
    def phi0(self):
        return self.params.phi0

    @property
    def phi(self):
        return self.params.phi

    @property
    def sigma2(self):
        return self.params.sigma2

    @property
    def nu(self):
        return self.params.nu

    @property
    def p(self):
        return self.params.p

    @cached_property
    def stationary_law(self):
        """``t_p(mu * 1_p, Gamma_p, nu)``."""
        return mvt.MvtDistribution(np.full(self.p, self.mu), self.gamma_p_matrix, self.nu)

    @cached_property
    def stationary_law_pplus1(self):
        """``t_{p+1}(mu * 1_{p+1}, Gamma_{p+1}, nu)``."""
        return mvt.MvtDistribution(
            np.full(self.p + 1, self.mu), self.gamma_pplus1, self.nu
        )

    @property
    def min_cond_var(self):
        """Smallest attainable conditional variance (lag vector at the mean)."""
        return self.sigma2 * (self.nu - 2.0) / (self.nu - 2.0 + self.p)

    def quad_form(self, z):
        """``(z - mu)' Gamma_p^{-1} (z - mu)`` for rows of ``z``."""
        return self.stationary_law.mahalanobis2(z)


def companion_matrix(phi):
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    out = np.zeros((p, p))
    out[0] = phi
    out[1:, :-1] = np.eye(p - 1)
    return out


def check_stationarity(phi, margin=STATIONARITY_MARGIN):
    """True iff every companion eigenvalue has modulus below ``1 - margin``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if phi.size == 0:
        raise ValueError("phi must have at least one coefficient")
    if not np.all(np.isfinite(phi)):
        raise DomainError("phi must be finite")
    if phi.size == 1:
        return bool(abs(phi[0]) < 1.0 - margin)
    eig = np.linalg.eigvals(companion_matrix(phi))
    return bool(np.max(np.abs(eig)) < 1.0 - margin)


def stationary_moments(params):
    """Solve for the stationary mean and autocovariances of a component.

    ``vec(Gamma_p) = (I - Phi kron Phi)^{-1} e_1 sigma2`` with ``Phi`` the
    companion matrix; ``gamma0``, ``gamma_p`` and ``Gamma_{p+1}`` follow.

    Raises
    ------
    DomainError
        Nonpositive variance, ``nu <= 2`` or nonstationary coefficients.
    ConditioningError
        ``I - Phi kron Phi`` too ill-conditioned to solve.
    """
    phi, sigma2, nu = params.phi, params.sigma2, params.nu
    if not (np.isfinite(params.phi0) and sigma2 > 0 and np.isfinite(sigma2)):
        raise DomainError(f"sigma2 must be positive and finite, got {sigma2}")
    if not (nu > 2 and np.isfinite(nu)):
        raise DomainError(f"nu must exceed 2, got {nu}")
    if not check_stationarity(phi):
        raise DomainError(f"phi={phi} is outside the stationarity region")
    p = phi.size
    big_phi = companion_matrix(phi)
    lhs = np.eye(p * p) - np.kron(big_phi, big_phi)
    if p == 1:
        gamma_p = np.array([[sigma2 / lhs[0, 0]]])
        if 1.0 / lhs[0, 0] > _MAX_CONDITION:
            raise ConditioningError("near unit root: I - phi^2 is numerically singular")
    else:
        if np.linalg.cond(lhs) > _MAX_CONDITION:
            raise ConditioningError("I - Phi kron Phi is numerically singular")
        rhs = np.zeros(p * p)
        rhs[0] = sigma2
        gamma_p = np.linalg.solve(lhs, rhs).reshape(p, p)
        gamma_p = 0.5 * (gamma_p + gamma_p.T)
    gamma_vec = gamma_p @ phi
    gamma0 = sigma2 + phi @ gamma_vec
    gamma_pp1 = np.empty((p + 1, p + 1))
    gamma_pp1[0, 0] = gamma0
    gamma_pp1[0, 1:] = gamma_vec
    gamma_pp1[1:, 0] = gamma_vec
    gamma_pp1[1:, 1:] = gamma_p
    mu = params.phi0 / (1.0 - phi.sum())
    stat = ComponentStationary(params, mu, gamma_p, float(gamma0), gamma_vec, gamma_pp1)
    try:
        stat.stationary_law
    except FactorizationError as exc:
        raise ConditioningError(f"Gamma_p is not numerically positive definite: {exc}")
    return stat


def cond_mean_var(stat, z):
    """Conditional mean and variance of the next value given lag vector ``z``.

    ``z`` is ordered most recent first, ``(z_{t-1}, ..., z_{t-p})``, and may be
    a batch of shape (n, p).
    """
    z = np.asarray(z, dtype=float)
    mean = stat.phi0 + z @ stat.phi
    q = stat.quad_form(z)
    var = stat.sigma2 * (stat.nu - 2.0 + q) / (stat.nu - 2.0 + stat.p)
    return mean, var


def standard_t(rng, dof, size=None):
    """Unit-variance Student t draws via the normal / chi-square compound."""
    z = rng.standard_normal(size)
    w = rng.chisquare(dof, size)
    return z * np.sqrt((dof - 2.0) / w)


def simulate_star(params, T, rng, init=None):
    """Simulate ``T`` values of a linear t autoregression.

    Parameters
    ----------
    params : ComponentParams or ComponentStationary
    T : int
    rng : numpy.random.Generator
    init : array_like, optional
        ``p`` presample values in chronological order. Drawn from the
        stationary law when omitted.

    Returns
    -------
    ndarray, shape (T,)
    """
    stat = params if isinstance(params, ComponentStationary) else stationary_moments(params)
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    p = stat.p
    if init is None:
        # stationary draw is exchangeable in time order (persymmetric Gamma_p)
        init = mvt.sample(stat.stationary_law, rng, 1)[0]
    else:
        init = np.asarray(init, dtype=float)
        if init.shape != (p,):
            raise ValueError(f"init must have length {p}")
    eps = standard_t(rng, stat.nu + p, T)
    chol_inv = solve_triangular(stat.stationary_law.chol, np.eye(p), lower=True)
    nu, sigma2, mu = stat.nu, stat.sigma2, stat.mu
    phi0, phi = stat.phi0, stat.phi
    buf = np.empty(T + p)
    buf[:p] = init
    for t in range(T):
        lag = buf[t : t + p][::-1]
        w = chol_inv @ (lag - mu)
        var = sigma2 * (nu - 2.0 + w @ w) / (nu - 2.0 + p)
        buf[t + p] = phi0 + phi @ lag + np.sqrt(var) * eps[t]
    return buf[p:]
