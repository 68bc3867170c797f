"""
Reference forecasting models and forecast evaluation.

AR(p) and HAR models are fitted by least squares and simulated with
Gaussian innovations. Forecasts from any model (these or an StMAR) are
evaluated over a fixed set of out-of-sample origins by prediction-interval
coverage and by QLIKE / squared loss of the path median.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DomainError, RankDeficiencyError
from .model import StmarParams
from .simulator import (
    EXP_CUMULATIVE,
    LEVEL,
    UPPER,
    ForecastPaths,
    forecast,
    to_target,
)

__all__ = [
    "OlsModel",
    "CoverageTable",
    "fit_ar_ols",
    "fit_har",
    "simulate_ols_paths",
    "qlike",
    "mse",
    "coverage_eval",
    "AGGREGATIONS",
]

AGGREGATIONS = {1: "daily", 5: "weekly", 10: "biweekly", 22: "monthly"}
HAR_WINDOWS = (1, 5, 22)


@dataclass(frozen=True)
class OlsModel:
    """A linear autoregression fitted by least squares.

    ``coefficients`` is ``(intercept, slopes...)``. For ``kind == "ar"`` the
    slopes multiply ``y_{t-1}, ..., y_{t-p}``; for ``"har"`` they multiply the
    lag-1 value and the 5- and 22-day averages of past values.
    """

    kind: str
    coefficients: np.ndarray
    residual_variance: float
    lag_order: int

    def regressors(self, lags):
        """Design rows (without intercept) from most-recent-first lag rows."""
        if self.kind == "ar":
            return lags
        return np.column_stack([lags[:, :w].mean(axis=1) for w in HAR_WINDOWS])

    def predict(self, lags):
        lags = np.atleast_2d(lags)
        return self.coefficients[0] + self.regressors(lags) @ self.coefficients[1:]


def _lags(data, order):
    T = data.size
    return np.column_stack([data[order - 1 - i : T - 1 - i] for i in range(order)])


def _ols(y, X):
    X = np.column_stack([np.ones(len(y)), X])
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more than {k} observations, got {n}")
    Q, R = np.linalg.qr(X)
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * max(d.max(), 1.0) * np.sqrt(n):
        raise RankDeficiencyError("design matrix does not have full column rank")
    beta = solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    return beta, float(resid @ resid / (n - k))


def fit_ar_ols(data, p):
    """Least-squares AR(p) with intercept."""
    data = np.asarray(data, dtype=float)
    if data.size <= 2 * p + 1:
        raise ValueError(f"series too short for AR({p})")
    lags = _lags(data, p)
    beta, s2 = _ols(data[p:], lags)
    return OlsModel("ar", beta, s2, p)


def fit_har(data):
    """Least-squares HAR: lag 1, mean of lags 1-5 and mean of lags 1-22."""
    data = np.asarray(data, dtype=float)
    order = HAR_WINDOWS[-1]
    if data.size <= order + len(HAR_WINDOWS) + 1:
        raise ValueError(f"series too short for HAR (needs > {order + 4} values)")
    model = OlsModel("har", np.zeros(4), 0.0, order)
    beta, s2 = _ols(data[order:], model.regressors(_lags(data, order)))
    return OlsModel("har", beta, s2, order)


def simulate_ols_paths(model, history, horizon, n_paths, rng, target=LEVEL):
    """Gaussian-innovation continuations of ``history`` under ``model``."""
    history = np.asarray(history, dtype=float)
    order = model.lag_order
    if history.size < order:
        raise ValueError(f"history needs at least {order} values")
    origin = history[history.size - order :]
    sd = np.sqrt(model.residual_variance)
    buf = np.empty((n_paths, order + horizon))
    buf[:, :order] = origin
    shocks = rng.standard_normal((horizon, n_paths))
    for t in range(horizon):
        lags = buf[:, t : t + order][:, ::-1]
        buf[:, order + t] = model.predict(lags) + sd * shocks[t]
    return ForecastPaths(to_target(buf[:, order:], target), target, origin.copy())


def qlike(rm, rm_hat):
    """QLIKE loss ``rm/rm_hat - log(rm/rm_hat) - 1`` (vectorized)."""
    rm = np.asarray(rm, dtype=float)
    rm_hat = np.asarray(rm_hat, dtype=float)
    if np.any(~(rm > 0)) or np.any(~(rm_hat > 0)):
        raise DomainError("QLIKE needs strictly positive arguments")
    ratio = rm / rm_hat
    out = ratio - np.log(ratio) - 1.0
    return out if out.ndim else float(out)


def mse(rm, rm_hat):
    """Squared loss ``(rm - rm_hat)**2``."""
    out = (np.asarray(rm, dtype=float) - np.asarray(rm_hat, dtype=float)) ** 2
    return out if out.ndim else float(out)


def _simulate(model, history, horizon, n_paths, rng, target):
    if isinstance(model, StmarParams):
        return forecast(model, history, horizon, n_paths, rng, target)
    if isinstance(model, OlsModel):
        return simulate_ols_paths(model, history, horizon, n_paths, rng, target)
    raise TypeError(f"cannot simulate from {type(model).__name__}")


@dataclass
class CoverageTable:
    """Coverage indicators and point forecasts per model and aggregation.

    ``indicators[(model, agg, level, sided)]`` is a boolean vector over the
    origins where the aggregation window is complete. ``medians[(model,
    agg)]`` and ``realized[agg]`` are aligned with the same origins.
    """

    models: list
    aggregations: list
    levels: list
    sided: list
    target: str
    indicators: dict = field(default_factory=dict)
    medians: dict = field(default_factory=dict)
    realized: dict = field(default_factory=dict)

    def coverage(self, model, agg, level, sided):
        """Empirical coverage percentage."""
        return 100.0 * float(np.mean(self.indicators[(model, agg, level, sided)]))

    def rows(self):
        for name in self.models:
            for agg in self.aggregations:
                for side in self.sided:
                    for q in self.levels:
                        ind = self.indicators[(name, agg, q, side)]
                        yield {
                            "model": name,
                            "aggregation": AGGREGATIONS.get(agg, f"{agg}-step"),
                            "horizon": agg,
                            "sided": side,
                            "level": q,
                            "n_origins": ind.size,
                            "coverage_pct": 100.0 * float(np.mean(ind)),
                        }

    def losses(self, reference=None):
        """Mean QLIKE and MSE of median forecasts; relative (x100) to ``reference``."""
        out = []
        for agg in self.aggregations:
            real = self.realized[agg]
            vals = {}
            for name in self.models:
                med = self.medians[(name, agg)]
                # QLIKE is defined on the positive realized-measure scale only
                q = float(np.mean(qlike(real, med))) if self.target == EXP_CUMULATIVE else np.nan
                vals[name] = (q, float(np.mean(mse(real, med))))
            for name in self.models:
                row = {
                    "model": name,
                    "aggregation": AGGREGATIONS.get(agg, f"{agg}-step"),
                    "horizon": agg,
                    "qlike": vals[name][0],
                    "mse": vals[name][1],
                }
                if reference is not None:
                    row["qlike_rel"] = 100.0 * vals[name][0] / vals[reference][0]
                    row["mse_rel"] = 100.0 * vals[name][1] / vals[reference][1]
                out.append(row)
        return out

    def to_csv(self, path):
        _write_rows(path, list(self.rows()))

    def losses_to_csv(self, path, reference=None):
        _write_rows(path, self.losses(reference))


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: f"{v:.12g}" if isinstance(v, float) else v for k, v in row.items()})


def realized_targets(data, agg, target):
    """Realized value per origin for an ``agg``-step window (complete windows only)."""
    data = np.asarray(data, dtype=float)
    n = data.size - agg + 1
    if target == EXP_CUMULATIVE:
        csum = np.concatenate([[0.0], np.cumsum(np.exp(data))])
        return csum[agg : agg + n] - csum[:n]
    return data[agg - 1 :]


def _interval_probs(levels, sided):
    probs = {"median": 0.5}
    for side in sided:
        for q in levels:
            if side == UPPER:
                probs[(q, side)] = (None, q)
            else:
                probs[(q, side)] = ((1 - q) / 2, (1 + q) / 2)
    flat = sorted({v for k, pair in probs.items() if k != "median" for v in pair if v is not None} | {0.5})
    return probs, flat


def coverage_eval(
    models,
    data,
    history,
    aggregations=(1, 5, 10, 22),
    levels=(0.99, 0.95, 0.9),
    sided=(UPPER,),
    n_paths=500_000,
    seed=0,
    target=EXP_CUMULATIVE,
):
    """Fixed-scheme evaluation over out-of-sample origins.

    Parameters
    ----------
    models : dict or list of (name, model)
        Each model is an ``StmarParams`` or ``OlsModel``.
    data : array_like
        Out-of-sample series on the modelling (level) scale.
    history : array_like
        In-sample values preceding ``data``; must cover every model's lag order.
    aggregations : sequence of int
        Cumulation windows; origins lacking a full window are skipped.
    sided : str or sequence of {"upper_one_sided", "two_sided"}
    n_paths : int
        Simulated paths per origin and model.
    seed : int
        Origin ``i`` and model ``j`` use a generator seeded with ``(seed, i, j)``.
    target : {"exp_cumulative", "level"}
        With ``exp_cumulative`` both paths and realized values become
        cumulative sums of ``exp``; with ``level`` the h-step value is used.

    Notes
    -----
    Intervals use the same linear order-statistic quantiles as
    :func:`stmar.simulator.prediction_intervals`.
    """
    models = list(models.items()) if isinstance(models, dict) else list(models)
    if not models:
        raise ValueError("at least one model is required")
    data = np.asarray(data, dtype=float)
    history = np.asarray(history, dtype=float)
    aggregations = sorted(int(a) for a in aggregations)
    levels = [float(q) for q in levels]
    sided = [sided] if isinstance(sided, str) else list(sided)
    if any(not 0 < q < 1 for q in levels):
        raise ValueError("levels must lie strictly between 0 and 1")
    horizon = aggregations[-1]
    if data.size < horizon:
        raise ValueError(f"out-of-sample length {data.size} is shorter than {horizon}")

    table = CoverageTable([n for n, _ in models], aggregations, levels, sided, target)
    for agg in aggregations:
        table.realized[agg] = realized_targets(data, agg, target)
    probs, flat = _interval_probs(levels, sided)
    col = {v: i for i, v in enumerate(flat)}

    full = np.concatenate([history, data])
    n_origins = data.size - aggregations[0] + 1
    quant = {}
    for j, (name, model) in enumerate(models):
        for agg in aggregations:
            quant[(name, agg)] = np.empty((data.size - agg + 1, len(flat)))
        for i in range(n_origins):
            steps = min(horizon, data.size - i)
            rng = np.random.default_rng([seed, i, j])
            fp = _simulate(model, full[: history.size + i], steps, n_paths, rng, target)
            aggs = [a for a in aggregations if a <= steps]
            qs = np.quantile(fp.paths[:, [a - 1 for a in aggs]], flat, axis=0)
            for k, agg in enumerate(aggs):
                quant[(name, agg)][i] = qs[:, k]

    for name, _ in models:
        for agg in aggregations:
            qa = quant[(name, agg)]
            real = table.realized[agg]
            table.medians[(name, agg)] = qa[:, col[0.5]]
            for side in sided:
                for q in levels:
                    lo, hi = probs[(q, side)]
                    upper = qa[:, col[hi]]
                    inside = real <= upper
                    if lo is not None:
                        inside &= real >= qa[:, col[lo]]
                    table.indicators[(name, agg, q, side)] = inside
    return table
