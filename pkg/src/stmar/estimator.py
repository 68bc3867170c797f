"""
Maximum likelihood estimation of StMAR models.

The search runs several independent populations of a genetic algorithm in
the unconstrained parameter space of :mod:`stmar.transforms`, refines each
population's winner with BFGS using central-difference gradients, and keeps
the best refined candidate. Standard errors come from a central-difference
Hessian of the summed log-likelihood in the original parameter coordinates.
"""

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import likelihood
from .exceptions import EstimationError
from .model import StmarParams, canonicalize, lag_matrix, mixing_weights
from .model import _log_cond_density_batch, log_stationary_density
from .transforms import DEFAULT_NU_CAP, pacf_to_ar, transform, untransform

__all__ = [
    "FitConfig",
    "FitResult",
    "fit",
    "numerical_hessian",
    "std_errors",
    "central_gradient",
]

_EPS_CBRT = np.finfo(float).eps ** (1.0 / 3.0)
_PENALTY = 1e10
THREADS_ENV = "STMAR_NUM_THREADS"


@dataclass
class FitConfig:
    """Settings for :func:`fit`.

    ``population_size`` of ``None`` means ``10 * k`` with ``k`` the number of
    free parameters. ``initial_guesses`` are injected into the first
    population (useful to guarantee a known point is among the candidates).
    """

    n_populations: int = 8
    population_size: Optional[int] = None
    ga_generations: int = 20
    local_max_iters: int = 500
    seed: int = 0
    nu_cap: float = DEFAULT_NU_CAP
    tolerance: float = 1e-6
    tournament_size: int = 3
    mutation_scale: float = 0.3
    mutation_decay: float = 0.9
    mutation_rate: float = 0.3
    exact_likelihood: bool = False
    initial_guesses: tuple = ()
    n_jobs: Optional[int] = None

    def __post_init__(self):
        for name in ("n_populations", "ga_generations", "local_max_iters", "tournament_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.population_size is not None and self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not self.nu_cap > 2:
            raise ValueError("nu_cap must exceed 2")


@dataclass
class FitResult:
    params: StmarParams
    sum_loglik: float
    criteria: tuple
    std_errors: np.ndarray
    hessian: np.ndarray
    mixing_series: np.ndarray
    effective_T: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def aic(self):
        return self.criteria[0]

    @property
    def hqc(self):
        return self.criteria[1]

    @property
    def bic(self):
        return self.criteria[2]


class _Objective:
    """Scaled log-likelihood as a function of the unconstrained vector."""

    def __init__(self, data, p, M, nu_cap, exact):
        self.data = data
        self.p, self.M = p, M
        self.nu_cap = nu_cap
        self.exact = exact
        self.y = data[p:]
        self.lags = lag_matrix(data, p)
        self.y0 = data[:p][::-1]
        self.n = self.y.size

    def loglik_params(self, params):
        """Summed log-likelihood, ``-inf`` when not computable."""
        try:
            total = np.add.reduce(_log_cond_density_batch(params, self.y, self.lags))
            if self.exact:
                total += log_stationary_density(params, self.y0)
        except (ValueError, np.linalg.LinAlgError, FloatingPointError):
            return -np.inf
        return float(total) if np.isfinite(total) else -np.inf

    def __call__(self, x):
        try:
            params = untransform(x, self.p, self.M, self.nu_cap)
        except (ValueError, FloatingPointError):
            return -np.inf
        return self.loglik_params(params) / self.n


def central_gradient(f, x, steps=None):
    """Central-difference gradient with steps ``eps**(1/3) * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    h = _EPS_CBRT * (1.0 + np.abs(x)) if steps is None else steps
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def numerical_hessian(objective, at):
    """Central second differences of ``objective`` at ``at``.

    Parameters
    ----------
    objective : callable
        Function of the packed parameter vector.
    at : StmarParams or array_like
        Evaluation point; a StmarParams is packed with ``to_vector``.

    Returns
    -------
    ndarray, shape (k, k)
        Symmetrized Hessian. Entries are NaN where ``objective`` was not
        finite at a stencil point.
    """
    x = at.to_vector() if isinstance(at, StmarParams) else np.asarray(at, dtype=float)
    k = x.size
    h = _EPS_CBRT * (1.0 + np.abs(x))
    f0 = objective(x)
    fp = np.empty(k)
    fm = np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h[i]
        fp[i] = objective(x + e)
        fm[i] = objective(x - e)
    H = np.empty((k, k))
    for i in range(k):
        H[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h[i] ** 2
        for j in range(i):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i], ej[j] = h[i], h[j]
            val = (
                objective(x + ei + ej)
                - objective(x + ei - ej)
                - objective(x - ei + ej)
                + objective(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            H[i, j] = H[j, i] = val
    H[~np.isfinite(H)] = np.nan
    return 0.5 * (H + H.T)


def std_errors(hessian):
    """Standard errors from the Hessian of a summed log-likelihood.

    Returns ``(se, ok)`` where ``ok`` is False when the negative Hessian is
    not positive definite (or not finite); the pseudo-inverse is used then and
    a warning is issued.
    """
    H = np.asarray(hessian, dtype=float)
    if not np.all(np.isfinite(H)):
        warnings.warn("Hessian has non-finite entries; standard errors unavailable")
        return np.full(H.shape[0], np.nan), False
    neg = -H
    try:
        np.linalg.cholesky(neg)
        cov = np.linalg.inv(neg)
        ok = True
    except np.linalg.LinAlgError:
        warnings.warn("negative Hessian is not positive definite; using pseudo-inverse")
        cov = np.linalg.pinv(neg)
        ok = False
    diag = np.diag(cov)
    with np.errstate(invalid="ignore"):
        se = np.where(diag > 0, np.sqrt(np.abs(diag)), np.nan)
    return se, ok


def _initial_population(rng, data, p, M, size, nu_cap):
    """Half moment-informed starts, half uniform over wide boxes."""
    k = M * (p + 4) - 1
    mean, sd = data.mean(), data.std()
    pop = np.empty((size, k))
    n_informed = size // 2
    for i in range(size):
        x = np.empty(k)
        for m in range(M):
            b = m * (p + 3)
            if i < n_informed:
                r = np.concatenate([rng.uniform(-0.3, 0.95, 1), rng.uniform(-0.4, 0.4, p - 1)])
                phi_sum = pacf_to_ar(r).sum()
                mu_m = np.quantile(data, rng.uniform(0.05, 0.95))
                x[b] = mu_m * (1.0 - phi_sum)
                x[b + 1 : b + p + 1] = np.arctanh(r)
                x[b + p + 1] = np.log(sd**2 * rng.uniform(0.05, 1.0) * (1.0 - r[0] ** 2))
                x[b + p + 2] = rng.uniform(0.0, np.log(30.0))
            else:
                lo, hi = min(0.0, 2.0 * mean) - 2.0 * sd, max(0.0, 2.0 * mean) + 2.0 * sd
                x[b] = rng.uniform(lo, hi)
                x[b + 1 : b + p + 1] = rng.uniform(-2.0, 2.0, p)
                x[b + p + 1] = np.log(sd**2) + rng.uniform(-5.0, 1.0)
                x[b + p + 2] = rng.uniform(-1.0, np.log(nu_cap - 2.0))
        x[M * (p + 3) :] = rng.uniform(-2.0, 2.0, M - 1)
        pop[i] = x
    return pop


def _gene_scales(data, p, M):
    k = M * (p + 4) - 1
    scales = np.ones(k)
    for m in range(M):
        scales[m * (p + 3)] = max(data.std(), 1e-8)
    return scales


def _run_ga(objective, pop, rng, config, scales, callback=None, index=0):
    fitness = np.array([objective(x) for x in pop])
    size, k = pop.shape
    for g in range(config.ga_generations):
        order = np.argsort(-fitness, kind="stable")
        elite = pop[order[0]].copy()
        elite_fit = fitness[order[0]]
        children = np.empty_like(pop)
        children[0] = elite
        step = config.mutation_scale * config.mutation_decay**g
        for c in range(1, size):
            parents = []
            for _ in range(2):
                cand = rng.integers(0, size, config.tournament_size)
                parents.append(pop[cand[np.argmax(fitness[cand])]])
            mask = rng.random(k) < 0.5
            child = np.where(mask, parents[0], parents[1])
            mutate = rng.random(k) < config.mutation_rate
            child = child + mutate * rng.standard_normal(k) * step * scales
            children[c] = child
        pop = children
        fitness = np.empty(size)
        fitness[0] = elite_fit
        fitness[1:] = [objective(x) for x in pop[1:]]
        if callback is not None:
            callback(index, g, float(np.max(fitness)))
    best = int(np.argmax(fitness))
    return pop[best], float(fitness[best])


def _local_refine(objective, x0, f0, config):
    """BFGS on the negative objective; never returns a worse point than ``x0``."""

    def neg(x):
        v = objective(x)
        return -v if np.isfinite(v) else _PENALTY

    def grad(x):
        return central_gradient(neg, x)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            neg,
            x0,
            jac=grad,
            method="BFGS",
            options={"maxiter": config.local_max_iters, "gtol": config.tolerance},
        )
    x, f = res.x, -float(res.fun)
    if not (np.isfinite(f) and f >= f0):
        x, f = x0, f0
    gnorm = float(np.max(np.abs(grad(x)))) if np.isfinite(f) else np.inf
    converged = bool(res.success or gnorm < 1e-3)
    return x, f, {
        "status": int(res.status),
        "message": str(res.message),
        "n_iter": int(res.nit),
        "grad_norm": gnorm,
        "converged": converged,
    }


def _run_population(args):
    data, p, M, config, index, callback = args
    objective = _Objective(data, p, M, config.nu_cap, config.exact_likelihood)
    k = M * (p + 4) - 1
    size = config.population_size or 10 * k
    rng = np.random.default_rng([config.seed, index])
    pop = _initial_population(rng, data, p, M, size, config.nu_cap)
    injected = 0
    if index == 0:
        for guess in config.initial_guesses[:size]:
            pop[injected] = transform(guess, config.nu_cap)
            injected += 1
    x_ga, f_ga = _run_ga(objective, pop, rng, config, _gene_scales(data, p, M), callback, index)
    if not np.isfinite(f_ga):
        return {"index": index, "ga_value": f_ga, "x": None, "value": -np.inf,
                "converged": False, "injected": injected}
    x, f, info = _local_refine(objective, x_ga, f_ga, config)
    return {
        "index": index,
        "ga_value": f_ga * objective.n,
        "x": x,
        "value": f * objective.n,
        "injected": injected,
        **info,
    }


def _n_jobs(config):
    if config.n_jobs is not None:
        return max(1, int(config.n_jobs))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def fit(data, p, M, config=None, callback: Optional[Callable] = None):
    """Estimate an StMAR(p, M) model by maximum likelihood.

    Parameters
    ----------
    data : array_like
        Chronological series; the first ``p`` values are conditioned on.
    p, M : int
        AR order and number of components.
    config : FitConfig, optional
    callback : callable, optional
        Called as ``callback(population_index, generation, best_value)``.

    Returns
    -------
    FitResult
        Canonical parameter estimates with criteria, standard errors and the
        fitted mixing-weight series.
    """
    config = config or FitConfig()
    data = np.asarray(data, dtype=float)
    k = M * (p + 4) - 1
    if data.size < p + k + 1:
        raise ValueError(f"need at least {p + k + 1} observations for StMAR({p},{M})")
    likelihood._check_data(data, p)

    jobs = [(data, p, M, config, i, None) for i in range(config.n_populations)]
    n_jobs = _n_jobs(config)
    if n_jobs > 1 and config.n_populations > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(_run_population, jobs))
        if callback is not None:
            for r in runs:
                callback(r["index"], config.ga_generations - 1, r["value"])
    else:
        runs = [_run_population(job[:-1] + (callback,)) for job in jobs]

    finite = [r for r in runs if r["x"] is not None and np.isfinite(r["value"])]
    diagnostics = {
        "starts": [{kk: v for kk, v in r.items() if kk != "x"} for r in runs],
        "injected_guesses": sum(r.get("injected", 0) for r in runs),
    }
    if not finite:
        raise EstimationError("no start produced a finite likelihood", diagnostics)
    best = max(finite, key=lambda r: (r["value"], tuple(-r["x"])))
    params = canonicalize(untransform(best["x"], p, M, config.nu_cap))

    report = likelihood.loglik(params, data, exact=config.exact_likelihood)
    objective = _Objective(data, p, M, config.nu_cap, config.exact_likelihood)

    def summed(theta):
        try:
            cand = StmarParams.from_vector(theta, p, M)
        except ValueError:
            return np.nan
        v = objective.loglik_params(cand)
        return v if np.isfinite(v) else np.nan

    H = numerical_hessian(summed, params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        se, hess_ok = std_errors(H)
    for w in caught:
        warnings.warn(str(w.message), RuntimeWarning, stacklevel=2)

    weights = mixing_weights(params, lag_matrix(data, p)).weights
    diagnostics.update(
        {
            "best_start": best["index"],
            "converged": bool(best["converged"]),
            "n_converged": sum(bool(r.get("converged")) for r in runs),
            "hessian_ok": hess_ok,
        }
    )
    return FitResult(
        params=params,
        sum_loglik=report.sum_loglik,
        criteria=likelihood.info_criteria(report.sum_loglik, k, report.effective_T),
        std_errors=se,
        hessian=H,
        mixing_series=weights,
        effective_T=report.effective_T,
        diagnostics=diagnostics,
    )
