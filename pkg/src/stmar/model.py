"""
The StMAR(p, M) model: a mixture of M linear t autoregressions whose mixing
weights at time t are proportional to ``alpha_m`` times the m-th component's
stationary ``t_p`` density evaluated at the lag vector.

Lag vectors are always ordered most recent first, ``(y_{t-1}, ..., y_{t-p})``.
Data series are chronological.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import mvt
from .ar_core import ComponentParams, stationary_moments

__all__ = [
    "StmarParams",
    "MixingWeights",
    "ConditionalMoments",
    "lag_matrix",
    "mixing_weights",
    "log_cond_density",
    "cond_moments",
    "log_stationary_density",
    "log_stationary_marginal",
    "unconditional_moments",
    "canonicalize",
    "params_to_text",
    "params_from_text",
    "parameter_names",
]


@dataclass(frozen=True, eq=False)
class StmarParams:
    """Parameters of an StMAR(p, M) model.

    Parameters
    ----------
    components : sequence of ComponentParams
        All with the same AR order.
    alphas : array_like, shape (M,)
        Mixing proportions. Not required to be in canonical order; see
        :func:`canonicalize`.

    Values are not checked for admissibility here (use
    ``likelihood.validate``); stationary quantities are computed lazily and
    raise on inadmissible values.
    """

    components: tuple
    alphas: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("at least one component is required")
        if not all(isinstance(c, ComponentParams) for c in comps):
            raise TypeError("components must be ComponentParams instances")
        if len({c.p for c in comps}) != 1:
            raise ValueError("all components must share the same AR order")
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float)).copy()
        if alphas.shape != (len(comps),):
            raise ValueError(f"expected {len(comps)} alphas, got {alphas.size}")
        alphas.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "alphas", alphas)

    @property
    def p(self):
        return self.components[0].p

    @property
    def M(self):
        return len(self.components)

    @property
    def n_params(self):
        """Number of free parameters, ``M * (p + 4) - 1``."""
        return self.M * (self.p + 4) - 1

    @cached_property
    def stationary(self):
        return tuple(stationary_moments(c) for c in self.components)

    @cached_property
    def _arrays(self):
        stat = self.stationary
        return {
            "phi0": np.array([s.phi0 for s in stat]),
            "phi": np.array([s.phi for s in stat]),  # (M, p)
            "sigma2": np.array([s.sigma2 for s in stat]),
            "nu": np.array([s.nu for s in stat]),
            "mu": np.array([s.mu for s in stat]),
            "log_alpha": np.log(self.alphas),
        }

    def to_vector(self):
        """Pack as ``(theta_1, ..., theta_M, alpha_1, ..., alpha_{M-1})``."""
        parts = [c.as_vector() for c in self.components]
        parts.append(self.alphas[:-1])
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, theta, p, M):
        """Inverse of :meth:`to_vector`; ``alpha_M = 1 - sum(alpha_1..M-1)``."""
        theta = np.asarray(theta, dtype=float)
        k = M * (p + 4) - 1
        if theta.shape != (k,):
            raise ValueError(f"StMAR({p},{M}) needs {k} parameters, got {theta.size}")
        comps = []
        for m in range(M):
            block = theta[m * (p + 3) : (m + 1) * (p + 3)]
            comps.append(ComponentParams(block[0], block[1 : p + 1], block[p + 1], block[p + 2]))
        head = theta[M * (p + 3) :]
        alphas = np.append(head, 1.0 - head.sum())
        return cls(comps, alphas)

    def __eq__(self, other):
        if not isinstance(other, StmarParams):
            return NotImplemented
        return (self.p, self.M) == (other.p, other.M) and np.array_equal(
            self.to_vector(), other.to_vector()
        ) and np.array_equal(self.alphas, other.alphas)

    def __hash__(self):
        return hash((self.p, self.M, self.to_vector().tobytes()))

    def __repr__(self):
        return f"StmarParams(p={self.p}, M={self.M}, theta={np.array2string(self.to_vector(), precision=4)})"


class MixingWeights(NamedTuple):
    weights: np.ndarray
    log_weights: np.ndarray


class ConditionalMoments(NamedTuple):
    component_means: np.ndarray
    component_vars: np.ndarray
    mixture_mean: float
    mixture_var: float


def logsumexp(a, axis=-1, keepdims=False):
    """Max-shifted log-sum-exp; rows of all ``-inf`` give ``-inf``."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    # explicit loop over the (short) component axis beats ufunc.reduce
    top = a[0]
    for row in a[1:]:
        top = np.maximum(top, row)
    top = np.where(np.isfinite(top), top, 0.0)
    acc = np.exp(a[0] - top)
    for row in a[1:]:
        acc += np.exp(row - top)
    with np.errstate(divide="ignore"):
        out = np.log(acc) + top
    return np.expand_dims(out, axis) if keepdims else out


def lag_matrix(data, p):
    """Rows ``(y_{t-1}, ..., y_{t-p})`` for ``t = p, ..., T-1`` (0-based)."""
    data = np.asarray(data, dtype=float)
    T = data.size
    if T < p:
        raise ValueError(f"need at least {p} observations, got {T}")
    cols = [data[p - 1 - i : T - 1 - i] for i in range(p)]
    if T == p:
        return np.empty((0, p))
    return np.column_stack(cols)


def _as_lags(params, y_lag):
    y_lag = np.asarray(y_lag, dtype=float)
    if y_lag.shape[-1:] != (params.p,) or y_lag.ndim > 2:
        raise ValueError(f"lag vectors must have length p={params.p}, got shape {y_lag.shape}")
    return y_lag


def _component_terms(params, lags):
    """Per-component quantities for a batch of lag vectors of shape (n, p).

    Returns log mixing weights, conditional means and conditional variances,
    each of shape (n, M).
    """
    arr = params._arrays
    n = lags.shape[0]
    M = params.M
    log_stat = np.empty((n, M))
    var = np.empty((n, M))
    for m, stat in enumerate(params.stationary):
        law = stat.stationary_law
        q = law.mahalanobis2(lags)
        log_stat[:, m] = law.log_norm_const - 0.5 * (stat.p + stat.nu) * np.log1p(
            q / (stat.nu - 2.0)
        )
        var[:, m] = stat.sigma2 * (stat.nu - 2.0 + q) / (stat.nu - 2.0 + stat.p)
    log_stat += arr["log_alpha"]
    log_w = log_stat - logsumexp(log_stat, axis=1, keepdims=True)
    mean = arr["phi0"] + lags @ arr["phi"].T
    return log_w, mean, var


def mixing_weights(params, y_lag):
    """Time-varying mixing weights for one lag vector or an (n, p) batch."""
    y_lag = _as_lags(params, y_lag)
    log_w, _, _ = _component_terms(params, y_lag.reshape(-1, params.p))
    if y_lag.ndim == 1:
        log_w = log_w[0]
    return MixingWeights(np.exp(log_w), log_w)


def _log_cond_density_batch(params, y, lags):
    log_w, mean, var = _component_terms(params, lags)
    nu = params._arrays["nu"] + params.p
    return logsumexp(log_w + mvt.log_t1(y[:, None], mean, var, nu), axis=1)


def log_cond_density(params, y, y_lag):
    """``log f(y | y_lag)``: log of the t_1 mixture with time-varying weights.

    Accepts a scalar ``y`` with a lag vector, or arrays of shape (n,) and
    (n, p).
    """
    y_lag = _as_lags(params, y_lag)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = _log_cond_density_batch(params, y_arr, y_lag.reshape(-1, params.p))
    return out[0] if y_lag.ndim == 1 else out


def cond_moments(params, y_lag):
    """Conditional mean and variance of ``y_t`` given one lag vector."""
    y_lag = _as_lags(params, y_lag)
    if y_lag.ndim != 1:
        raise ValueError("cond_moments takes a single lag vector")
    log_w, mean, var = _component_terms(params, y_lag[None, :])
    w, mean, var = np.exp(log_w[0]), mean[0], var[0]
    mix_mean = w @ mean
    mix_var = w @ var + w @ (mean - mix_mean) ** 2
    return ConditionalMoments(mean, var, float(mix_mean), float(mix_var))


def log_stationary_density(params, y, dim=None):
    """Log stationary density of ``p`` or ``p + 1`` consecutive observations.

    ``y`` is a vector (or batch of rows) of length ``dim``; ``dim`` defaults
    to the trailing length of ``y``.
    """
    y = np.asarray(y, dtype=float)
    dim = y.shape[-1] if dim is None else int(dim)
    if dim not in (params.p, params.p + 1):
        raise ValueError(f"dim must be p={params.p} or p+1={params.p + 1}")
    if y.shape[-1] != dim:
        raise ValueError(f"y has length {y.shape[-1]}, expected {dim}")
    terms = []
    for stat in params.stationary:
        law = stat.stationary_law if dim == params.p else stat.stationary_law_pplus1
        terms.append(mvt.log_density(law, y))
    terms = np.stack(terms, axis=-1) + np.log(params.alphas)
    return logsumexp(terms, axis=-1)


def log_stationary_marginal(params, y):
    """Log stationary density of a single observation ``y_t`` (vectorized)."""
    y = np.asarray(y, dtype=float)
    terms = [
        mvt.log_t1(y, s.mu, s.gamma0, s.nu) for s in params.stationary
    ]
    return logsumexp(np.stack(terms, axis=-1) + np.log(params.alphas), axis=-1)


def unconditional_moments(params):
    """Stationary mean and autocovariances ``gamma_0, ..., gamma_p``."""
    stat = params.stationary
    a = params.alphas
    mus = np.array([s.mu for s in stat])
    mean = a @ mus
    gammas = np.array([s.gamma_pplus1[0] for s in stat])  # (M, p+1)
    between = a @ (mus - mean) ** 2
    return float(mean), a @ gammas + between


def canonicalize(params):
    """Reorder components by descending alpha.

    Exact ties in alpha are broken by ascending nu, then ascending phi0.
    """
    order = sorted(
        range(params.M),
        key=lambda m: (-params.alphas[m], params.components[m].nu, params.components[m].phi0),
    )
    if order == list(range(params.M)):
        return params
    return StmarParams([params.components[m] for m in order], params.alphas[order])


def parameter_names(p, M):
    """Labels for the packed parameter vector, e.g. ``phi_1_0``, ``alpha_1``."""
    names = []
    for m in range(1, M + 1):
        names.append(f"phi_{m}_0")
        names.extend(f"phi_{m}_{i}" for i in range(1, p + 1))
        names.extend([f"sigma2_{m}", f"nu_{m}"])
    names.extend(f"alpha_{m}" for m in range(1, M))
    return names


def params_to_text(params):
    """One comma-separated line ``p,M,theta...`` with 12 significant digits."""
    fields = [str(params.p), str(params.M)]
    fields.extend(f"{v:.12g}" for v in params.to_vector())
    return ",".join(fields) + "\n"


def params_from_text(text):
    """Parse the output of :func:`params_to_text`. Lines starting with # are ignored."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) != 1:
        raise ValueError("parameter record must be a single non-comment line")
    fields = [f.strip() for f in lines[0].replace(" ", ",").split(",") if f.strip()]
    try:
        p, M = int(fields[0]), int(fields[1])
        theta = np.array([float(f) for f in fields[2:]])
    except (ValueError, IndexError):
        raise ValueError(f"malformed parameter record: {lines[0]!r}") from None
    return StmarParams.from_vector(theta, p, M)
