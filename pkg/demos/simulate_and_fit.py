"""Simulate a two-regime StMAR(1,2) series and recover its parameters."""

import numpy as np

from stmar import ComponentParams, FitConfig, StmarParams, fit
from stmar.model import unconditional_moments
from stmar.simulator import simulate_path

truth = StmarParams(
    [ComponentParams(-1.5, [0.85], 0.35, 4.0), ComponentParams(-5.5, [0.35], 0.3, 8.0)],
    [0.6, 0.4],
)
mean, gamma = unconditional_moments(truth)
print(f"stationary mean {mean:.4f}, variance {gamma[0]:.4f}")

y = simulate_path(truth, 3000, np.random.default_rng(1))
print(f"sample mean {y.mean():.4f}, variance {y.var():.4f}")

# small search budget so the demo finishes in well under a minute
result = fit(y, 1, 2, FitConfig(n_populations=2, ga_generations=10, seed=1))
names = ["phi_1_0", "phi_1_1", "sigma2_1", "nu_1", "phi_2_0", "phi_2_1", "sigma2_2", "nu_2", "alpha_1"]
print(f"{'parameter':>10} {'truth':>8} {'estimate':>9} {'s.e.':>7}")
for name, t, e, s in zip(names, truth.to_vector(), result.params.to_vector(), result.std_errors):
    print(f"{name:>10} {t:8.3f} {e:9.3f} {s:7.3f}")
print(f"loglik {result.sum_loglik:.2f}, AIC {result.aic:.2f}, BIC {result.bic:.2f}")
