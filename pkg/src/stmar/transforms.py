"""
Bijection between admissible StMAR parameters and unconstrained reals.

Per component the free vector is ``(phi0, x_1..x_p, log sigma2,
log(nu - 2))`` where ``tanh(x_i)`` are the partial autocorrelations of the
AR polynomial; the Durbin-Levinson recursion maps partial autocorrelations
in (-1, 1)^p onto the stationarity region. Mixing proportions use the
additive-logistic map with ``alpha_M`` as the reference category.
"""

import numpy as np

from .ar_core import ComponentParams
from .exceptions import DomainError
from .model import StmarParams

__all__ = [
    "pacf_to_ar",
    "ar_to_pacf",
    "transform",
    "untransform",
]

DEFAULT_NU_CAP = 200.0
# keeps tanh away from +-1 so the inverse stays finite
_PACF_CLIP = 1.0 - 1e-12


def pacf_to_ar(r):
    """AR coefficients from partial autocorrelations (Durbin-Levinson)."""
    r = np.asarray(r, dtype=float)
    phi = np.empty(0)
    for k, rk in enumerate(r):
        phi = np.append(phi - rk * phi[::-1], rk) if k else np.array([rk])
    return phi


def ar_to_pacf(phi):
    """Partial autocorrelations of a stationary AR polynomial (backward recursion)."""
    phi = np.array(phi, dtype=float)
    p = phi.size
    r = np.empty(p)
    for k in range(p - 1, -1, -1):
        rk = phi[k]
        r[k] = rk
        if k:
            if abs(rk) >= 1.0:
                raise DomainError("coefficients are outside the stationarity region")
            phi = (phi[:k] + rk * phi[:k][::-1]) / (1.0 - rk * rk)
    if np.any(np.abs(r) >= 1.0):
        raise DomainError("coefficients are outside the stationarity region")
    return r


def transform(params, nu_cap=DEFAULT_NU_CAP):
    """Map admissible parameters to an unconstrained vector of length k."""
    out = []
    for c in params.components:
        nu = min(c.nu, nu_cap)
        out.append(c.phi0)
        out.extend(np.arctanh(ar_to_pacf(c.phi)))
        out.append(np.log(c.sigma2))
        out.append(np.log(nu - 2.0))
    a = params.alphas
    out.extend(np.log(a[:-1]) - np.log(a[-1]))
    return np.array(out)


def untransform(x, p, M, nu_cap=DEFAULT_NU_CAP):
    """Inverse of :func:`transform`. ``nu`` saturates at ``nu_cap``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("cannot untransform a non-finite vector")
    k = M * (p + 4) - 1
    if x.shape != (k,):
        raise ValueError(f"StMAR({p},{M}) needs {k} free parameters, got {x.size}")
    comps = []
    for m in range(M):
        b = x[m * (p + 3) : (m + 1) * (p + 3)]
        r = np.clip(np.tanh(b[1 : p + 1]), -_PACF_CLIP, _PACF_CLIP)
        nu = 2.0 + min(np.exp(b[p + 2]), nu_cap - 2.0)
        comps.append(ComponentParams(b[0], pacf_to_ar(r), np.exp(b[p + 1]), nu))
    logits = np.append(x[M * (p + 3) :], 0.0)
    logits -= logits.max()
    a = np.exp(logits)
    return StmarParams(comps, a / a.sum())
