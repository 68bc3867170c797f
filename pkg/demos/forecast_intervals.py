"""Monte Carlo prediction intervals for cumulative volatility over 22 days."""

import numpy as np

from stmar import ComponentParams, StmarParams
from stmar.simulator import EXP_CUMULATIVE, UPPER, TWO_SIDED, forecast, prediction_intervals, simulate_path

params = StmarParams(
    [ComponentParams(-1.5, [0.85], 0.35, 4.0), ComponentParams(-5.5, [0.35], 0.3, 8.0)],
    [0.6, 0.4],
)
history = simulate_path(params, 500, np.random.default_rng(3))

for label, origin in (("calm", history.min()), ("turbulent", history.max())):
    fp = forecast(params, [origin], 22, 100_000, np.random.default_rng(4), target=EXP_CUMULATIVE)
    up = prediction_intervals(fp, [0.99], UPPER)[0]
    two = prediction_intervals(fp, [0.9], TWO_SIDED)[0]
    print(f"{label} origin (log level {origin:.2f})")
    for h in (0, 4, 21):
        print(f"  h={h + 1:2d}  median {fp.median()[h]:.3e}  "
              f"90% [{two.lower[h]:.3e}, {two.upper[h]:.3e}]  99% upper {up.upper[h]:.3e}")
