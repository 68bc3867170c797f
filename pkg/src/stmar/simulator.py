"""
Simulation and Monte-Carlo forecasting for StMAR models.

Each step draws the generating regime from the time-varying mixing weights,
then the new value from that regime's conditional t_1 law. Many paths are
simulated side by side; a single path is the ``n = 1`` case, so
:func:`forecast` with one path reproduces :func:`simulate_path` exactly for
the same generator state and initial values.
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import mvt
from .model import _component_terms

__all__ = [
    "LEVEL",
    "EXP_CUMULATIVE",
    "UPPER",
    "TWO_SIDED",
    "ForecastPaths",
    "IntervalSummary",
    "simulate_path",
    "simulate_paths",
    "draw_stationary",
    "forecast",
    "prediction_intervals",
    "to_target",
    "write_intervals_csv",
    "write_paths_csv",
]

LEVEL = "level"
EXP_CUMULATIVE = "exp_cumulative"
UPPER = "upper_one_sided"
TWO_SIDED = "two_sided"
_TARGETS = (LEVEL, EXP_CUMULATIVE)
_SIDES = (UPPER, TWO_SIDED)
CHUNK_SIZE = 10_000


@dataclass(frozen=True)
class ForecastPaths:
    """Simulated continuations; ``paths`` has shape (n_paths, horizon)."""

    paths: np.ndarray
    target: str
    origin: np.ndarray

    @property
    def horizon(self):
        return self.paths.shape[1]

    @property
    def n_paths(self):
        return self.paths.shape[0]

    def median(self):
        return np.median(self.paths, axis=0)


@dataclass(frozen=True)
class IntervalSummary:
    """Per-horizon interval bounds; ``lower`` is ``-inf`` for upper one-sided."""

    level: float
    sided: str
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, values):
        values = np.asarray(values, dtype=float)
        return (values >= self.lower) & (values <= self.upper)


def _check_target(target):
    if target not in _TARGETS:
        raise ValueError(f"target must be one of {_TARGETS}, got {target!r}")


def to_target(paths, target):
    """Apply the forecast-target transform to level paths."""
    _check_target(target)
    if target == EXP_CUMULATIVE:
        return np.cumsum(np.exp(paths), axis=1)
    return paths


def _draw_innovations(params, steps, n, rng):
    """Uniforms for regime choice, normals, and chi-square draws per regime."""
    dof = params._arrays["nu"] + params.p
    u = rng.random((steps, n))
    z = rng.standard_normal((steps, n))
    w = rng.chisquare(dof, size=(steps, n, params.M))
    return u, z, w


def _simulate_single(params, init, steps, draws):
    """Scalar kernel for one path; avoids per-step array overhead."""
    u, z, w = draws
    p, M = params.p, params.M
    comps = []
    for stat, log_a in zip(params.stationary, np.log(params.alphas)):
        law = stat.stationary_law
        linv = np.linalg.inv(law.chol).tolist()
        comps.append((
            stat.mu, linv, law.log_norm_const + log_a, stat.nu, stat.sigma2,
            stat.phi0, stat.phi.tolist(), stat.nu + p,
        ))
    buf = list(map(float, init))
    out = np.empty(steps)
    regimes = np.empty(steps, dtype=np.intp)
    log1p, exp, sqrt = math.log1p, math.exp, math.sqrt
    for t in range(steps):
        lag = buf[-1 : -p - 1 : -1]
        logd = [0.0] * M
        means = [0.0] * M
        vars_ = [0.0] * M
        for m, (mu, linv, const, nu, s2, phi0, phi, _) in enumerate(comps):
            diff = [v - mu for v in lag]
            q = 0.0
            for i in range(p):
                row = linv[i]
                wi = 0.0
                for j in range(i + 1):
                    wi += row[j] * diff[j]
                q += wi * wi
            logd[m] = const - 0.5 * (p + nu) * log1p(q / (nu - 2.0))
            vars_[m] = s2 * (nu - 2.0 + q) / (nu - 2.0 + p)
            mean = phi0
            for i in range(p):
                mean += phi[i] * lag[i]
            means[m] = mean
        top = max(logd)
        e = [exp(v - top) for v in logd]
        total = sum(e)
        threshold = u[t, 0] * total
        regime, acc = M - 1, 0.0
        for m in range(M - 1):
            acc += e[m]
            if threshold < acc:
                regime = m
                break
        dof = comps[regime][7]
        eps = z[t, 0] * sqrt((dof - 2.0) / w[t, 0, regime])
        y = means[regime] + sqrt(vars_[regime]) * eps
        out[t] = y
        regimes[t] = regime
        buf.append(y)
        buf.pop(0)
    return out, regimes


def _simulate_block(params, init, steps, rng):
    """Advance ``init`` (n, p) chronological rows by ``steps`` steps."""
    n, p = init.shape
    draws = _draw_innovations(params, steps, n, rng)
    if n == 1:
        return _simulate_single(params, init[0], steps, draws)[0][None, :]
    u, z, w = draws
    dof = params._arrays["nu"] + p
    buf = np.empty((n, p + steps))
    buf[:, :p] = init
    rows = np.arange(n)
    for t in range(steps):
        lags = buf[:, t : t + p][:, ::-1]
        log_w, mean, var = _component_terms(params, lags)
        cum = np.cumsum(np.exp(log_w), axis=1)
        regime = np.minimum((u[t][:, None] * cum[:, -1:] >= cum).sum(axis=1), params.M - 1)
        eps = z[t] * np.sqrt((dof[regime] - 2.0) / w[t, rows, regime])
        buf[:, p + t] = mean[rows, regime] + np.sqrt(var[rows, regime]) * eps
    return buf[:, p:]


def draw_stationary(params, rng, n=1):
    """Draw ``n`` chronological p-vectors from the stationary mixture."""
    regime = rng.choice(params.M, size=n, p=params.alphas)
    out = np.empty((n, params.p))
    for m, stat in enumerate(params.stationary):
        idx = np.flatnonzero(regime == m)
        if idx.size:
            out[idx] = mvt.sample(stat.stationary_law, rng, idx.size)
    return out


def simulate_path(params, T, rng, init=None, return_regimes=False):
    """Simulate a path of length ``T``.

    ``init`` holds ``p`` chronological presample values; when omitted they are
    drawn from the stationary mixture. With ``return_regimes`` the 0-based
    index of the generating component at each step is returned as well.
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    if init is None:
        init = draw_stationary(params, rng, 1)[0]
    init = np.asarray(init, dtype=float)
    if init.shape != (params.p,):
        raise ValueError(f"init must have length p={params.p}")
    draws = _draw_innovations(params, T, 1, rng)
    path, regimes = _simulate_single(params, init, T, draws)
    return (path, regimes) if return_regimes else path


def simulate_paths(params, init, horizon, n_paths, rng):
    """``n_paths`` level continuations of the chronological history tail ``init``."""
    init = np.asarray(init, dtype=float)
    out = np.empty((n_paths, horizon))
    for start in range(0, n_paths, CHUNK_SIZE):
        stop = min(start + CHUNK_SIZE, n_paths)
        block = np.broadcast_to(init, (stop - start, init.size))
        out[start:stop] = _simulate_block(params, block, horizon, rng)
    return out


def forecast(params, history, horizon, n_paths, rng, target=LEVEL):
    """Monte-Carlo forecast paths conditional on the end of ``history``."""
    _check_target(target)
    history = np.asarray(history, dtype=float)
    if history.size < params.p:
        raise ValueError(f"history needs at least p={params.p} values")
    if horizon < 1 or n_paths < 1:
        raise ValueError("horizon and n_paths must be at least 1")
    origin = history[history.size - params.p :].copy()
    paths = simulate_paths(params, origin, int(horizon), int(n_paths), rng)
    return ForecastPaths(to_target(paths, target), target, origin)


def prediction_intervals(fp, levels, sided=UPPER):
    """Empirical per-horizon prediction intervals from simulated paths.

    Upper one-sided at level q is ``(-inf, Q(q)]``; two-sided is
    ``[Q((1-q)/2), Q((1+q)/2)]``. Quantiles interpolate linearly between
    order statistics.
    """
    if sided not in _SIDES:
        raise ValueError(f"sided must be one of {_SIDES}, got {sided!r}")
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if np.any((levels <= 0) | (levels >= 1)):
        raise ValueError("levels must lie strictly between 0 and 1")
    if fp.n_paths < 1000:
        warnings.warn(f"only {fp.n_paths} paths; interval quantiles may be unstable")
    out = []
    for q in levels:
        if sided == UPPER:
            upper = np.quantile(fp.paths, q, axis=0)
            lower = np.full_like(upper, -np.inf)
        else:
            lower, upper = np.quantile(fp.paths, [(1 - q) / 2, (1 + q) / 2], axis=0)
        out.append(IntervalSummary(float(q), sided, lower, upper))
    return out


def write_paths_csv(path, fp):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path"] + [f"h{h}" for h in range(1, fp.horizon + 1)])
        for i, row in enumerate(fp.paths):
            w.writerow([i] + [f"{v:.12g}" for v in row])


def write_intervals_csv(path, intervals, median=None):
    """One row per horizon; columns ``lower_<level>``/``upper_<level>``."""
    horizon = intervals[0].upper.size
    header = ["horizon"]
    if median is not None:
        header.append("median")
    for iv in intervals:
        header += [f"lower_{iv.level:g}", f"upper_{iv.level:g}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for h in range(horizon):
            row = [h + 1]
            if median is not None:
                row.append(f"{median[h]:.12g}")
            for iv in intervals:
                row += [f"{iv.lower[h]:.12g}", f"{iv.upper[h]:.12g}"]
            w.writerow(row)
