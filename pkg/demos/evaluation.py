"""Out-of-sample interval coverage and losses for StMAR, AR and HAR models."""

import numpy as np

from stmar import ComponentParams, StmarParams
from stmar.benchmark import coverage_eval, fit_ar_ols, fit_har
from stmar.simulator import TWO_SIDED, UPPER, simulate_path

params = StmarParams(
    [ComponentParams(-1.5, [0.85], 0.35, 4.0), ComponentParams(-5.5, [0.35], 0.3, 8.0)],
    [0.6, 0.4],
)
y = simulate_path(params, 2400, np.random.default_rng(5))
history, oos = y[:2000], y[2000:]

models = [("StMAR", params), ("AR(11)", fit_ar_ols(history, 11)), ("HAR", fit_har(history))]
table = coverage_eval(models, oos, history, aggregations=(1, 5, 22), levels=(0.99, 0.9),
                      sided=(UPPER, TWO_SIDED), n_paths=5000, seed=6)
print("coverage (%)")
for row in table.rows():
    print(f"  {row['model']:>7} h={row['horizon']:<3} {row['sided']:>9} {row['level']:.2f}  {row['coverage_pct']:6.2f}")
print("losses relative to AR(11)")
for row in table.losses(reference="AR(11)"):
    print(f"  {row['model']:>7} h={row['horizon']:<3} QLIKE {row['qlike_rel']:7.2f}  MSE {row['mse_rel']:7.2f}")
