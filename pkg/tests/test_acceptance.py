"""
Acceptance criteria 1-8. Each test records a one-line PASS/FAIL verdict that
is printed at the end of the pytest run (see ``conftest.py``); running this
file directly prints the same lines.
"""

import filecmp
import sys

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import TRUTH, random_params
from stmar import mvt
from stmar.ar_core import ComponentParams, cond_mean_var, simulate_star, stationary_moments
from stmar.benchmark import coverage_eval, fit_ar_ols, mse, qlike
from stmar.cli import main as cli_main
from stmar.estimator import FitConfig, fit
from stmar.io import write_params, write_series
from stmar.likelihood import cond_loglik, info_criteria
from stmar.model import StmarParams, canonicalize, log_cond_density, unconditional_moments
from stmar.simulator import TWO_SIDED, UPPER, forecast, simulate_path

RESULTS = {}

# T = 5000 standard deviations reported for the StMAR(1,2) simulation design
TABLE_SD = {"phi_1_0": 0.22, "phi_1_1": 0.03, "sigma2_1": 0.04, "phi_2_1": 0.05, "alpha_1": 0.03}
TRUE_VALUE = {"phi_1_0": -1.5, "phi_1_1": 0.85, "sigma2_1": 0.35, "phi_2_1": 0.35, "alpha_1": 0.6}
THETA_INDEX = {"phi_1_0": 0, "phi_1_1": 1, "sigma2_1": 2, "phi_2_1": 5, "alpha_1": 8}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def test_criterion_1_information_criteria():
    cases = [
        (-2854.153, 7, (5722.306, 5737.741, 5765.613)),
        (-2832.665, 15, (5695.330, 5728.406, 5788.131)),
        (-2820.077, 23, (5686.154, 5736.870, 5828.449)),
    ]
    worst = max(
        np.max(np.abs(np.array(info_criteria(ll, k, 3593)) - np.array(exp))) for ll, k, exp in cases
    )
    record(1, worst <= 0.01, f"max |IC error| = {worst:.4f} over 9 values (tol 0.01)")


def test_criterion_2_distribution_identities():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 6))
        a = rng.standard_normal((d, d))
        dist = mvt.MvtDistribution(rng.standard_normal(d), a @ a.T + d * np.eye(d), rng.uniform(2.1, 60))
        k = int(rng.integers(1, d))
        cond_idx = rng.permutation(d)[:k]
        free = np.setdiff1d(np.arange(d), cond_idx)
        x = rng.standard_normal(d) * 2
        joint = mvt.log_density(dist, x)
        split = mvt.log_density(mvt.conditional(dist, cond_idx, x[cond_idx]), x[free]) + mvt.log_density(
            mvt.marginal(dist, cond_idx), x[cond_idx]
        )
        worst = max(worst, abs(joint - split))
    t1 = mvt.MvtDistribution([0.5], [[2.0]], 3.5)
    n1 = integrate.quad(lambda y: np.exp(mvt.log_density(t1, [y])), -np.inf, np.inf,
                        epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    t2 = mvt.MvtDistribution([0.0, 1.0], [[1.0, 0.4], [0.4, 2.0]], 5.0)
    n2 = integrate.dblquad(lambda v, u: np.exp(mvt.log_density(t2, [u, v])), -80, 80, -80, 80,
                           epsabs=1e-10, epsrel=1e-10)[0]
    ok = worst <= 1e-10 and abs(n1 - 1) <= 1e-6 and abs(n2 - 1) <= 1e-6
    record(2, ok, f"factorization max err {worst:.2e}; t1 mass {n1:.9f}; t2 mass {n2:.9f}")


def test_criterion_3_component_moments():
    # nu = 4 gives the marginal infinite kurtosis; a single run's sample
    # variance is too noisy to resolve 2%, so medians over replications are used
    comp = ComponentParams(-1.5, [0.85], 0.35, 4.0)
    stat = stationary_moments(comp)
    means, ratios, resid = [], [], []
    for r in range(10):
        z = simulate_star(comp, 200_000, np.random.default_rng([3, r]))
        m, v = cond_mean_var(stat, z[:-1, None])
        means.append(z.mean())
        ratios.append(z.var() / 1.261261)
        resid.append(((z[1:] - m) / np.sqrt(v)).var())
    mean, ratio, rv = np.median(means), np.median(ratios), np.median(resid)
    ok = abs(mean + 10) < 0.05 and abs(ratio - 1) < 0.02 and abs(rv - 1) < 0.01
    record(3, ok, f"median over 10 runs: mean {mean:.4f}, var/1.261261 {ratio:.4f}, resid var {rv:.4f} "
                  f"(first run alone: {means[0]:.4f}, {ratios[0]:.4f}, {resid[0]:.4f})")


def test_criterion_4_stationarity():
    y = simulate_path(TRUTH, 500_000, np.random.default_rng(4))
    target, _ = unconditional_moments(TRUTH)
    mean_err = abs(y.mean() - target)

    lag = [-9.4]
    n = 1_000_000
    x = forecast(TRUTH, lag, 1, n, np.random.default_rng(40)).paths[:, 0]
    lo, hi = np.quantile(x, [0.001, 0.999])
    edges = np.concatenate([[-np.inf], np.linspace(lo, hi, 199), [np.inf]])
    f = lambda v: np.exp(log_cond_density(TRUTH, v, lag))
    probs = np.array([integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-10)[0]
                      for a, b in zip(edges[:-1], edges[1:])])
    counts = np.histogram(x, edges)[0]
    _, pval = stats.chisquare(counts, probs / probs.sum() * n)
    ok = mean_err < 0.02 and pval > 0.001
    record(4, ok, f"|mean - {target:.5f}| = {mean_err:.4f}; 200-bin chi-square p = {pval:.3f}")


@pytest.mark.slow
def test_criterion_5_estimator_recovery():
    estimates, converged = [], 0
    for r in range(10):
        y = simulate_path(TRUTH, 5000, np.random.default_rng([2024, r]))
        res = fit(y, 1, 2, FitConfig(n_populations=4, seed=r))
        estimates.append(res.params.to_vector())
        converged += res.diagnostics["converged"]
    med = np.median(estimates, axis=0)
    parts, ok = [], converged >= 9
    for name, idx in THETA_INDEX.items():
        dev = abs(med[idx] - TRUE_VALUE[name]) / TABLE_SD[name]
        ok &= dev <= 3
        parts.append(f"{name} {med[idx]:.3f} ({dev:.1f} SD)")
    record(5, ok, "; ".join(parts) + f"; converged {converged}/10")


@pytest.fixture(scope="module")
def coverage_data():
    y = simulate_path(TRUTH, 5500, np.random.default_rng(606))
    return y[:3000], y[3000:]


@pytest.mark.slow
def test_criterion_6_coverage(coverage_data):
    hist, oos = coverage_data
    one = coverage_eval({"StMAR": TRUTH}, oos[:2000], hist, aggregations=(1,), levels=(0.95, 0.9),
                        sided=(UPPER, TWO_SIDED), n_paths=20_000, seed=1)
    c95 = one.coverage("StMAR", 1, 0.95, TWO_SIDED)
    c90 = one.coverage("StMAR", 1, 0.9, UPPER)
    ar = fit_ar_ols(hist, 1)
    month = coverage_eval({"StMAR": TRUTH, "AR(1)": ar}, oos[:2021], hist, aggregations=(22,),
                          levels=(0.99,), sided=(UPPER,), n_paths=10_000, seed=2)
    s99 = month.coverage("StMAR", 22, 0.99, UPPER)
    a99 = month.coverage("AR(1)", 22, 0.99, UPPER)
    cover_ok = abs(c95 - 95) <= 1.5 and abs(c90 - 90) <= 1.5
    direction_ok = a99 < 99 and a99 < s99
    record(6, cover_ok and direction_ok,
           f"one-step 95% two-sided {c95:.2f}%, 90% upper {c90:.2f}% (tol 1.5 pp): "
           f"{'ok' if cover_ok else 'out of tolerance'}; 99% monthly upper AR(1) {a99:.2f}% "
           f"vs StMAR {s99:.2f}%: {'AR under-covers' if direction_ok else 'AR does not under-cover'}")


def test_criterion_7_losses():
    rng = np.random.default_rng(7)
    a = np.exp(rng.uniform(-8, 8, 1_000_000))
    b = np.exp(rng.uniform(-8, 8, 1_000_000))
    q = qlike(a, b)
    exact = abs(qlike(2.0, 1.0) - (1 - np.log(2)))
    ok = (
        exact < 1e-12
        and np.all(q >= 0)
        and np.array_equal(mse(a, b), mse(b, a))
        and np.all(mse(a, a) == 0)
        and np.all(np.abs(qlike(a, a)) < 1e-14)
    )
    record(7, ok, f"|qlike(2,1) - (1 - ln 2)| = {exact:.1e}; min qlike on 1e6 grid {q.min():.2e}")


def test_criterion_8_invariances(tmp_path):
    rng = np.random.default_rng(8)
    params = random_params(rng, 2, 3)
    y = simulate_path(params, 3000, rng)
    permuted = StmarParams([params.components[i] for i in (2, 0, 1)], params.alphas[[2, 0, 1]])
    canon = canonicalize(permuted)
    idem = canonicalize(canon) is canon and canon == params
    base = cond_loglik(params, y).sum_loglik
    perm_err = abs(cond_loglik(permuted, y).sum_loglik - base) / abs(base)

    a, b = 0.3, 1.7
    mapped = StmarParams(
        [ComponentParams(a * c.phi0 + b * (1 - c.phi.sum()), c.phi, a * a * c.sigma2, c.nu)
         for c in params.components],
        params.alphas,
    )
    rep = cond_loglik(mapped, a * y + b)
    affine_err = abs(rep.sum_loglik - (base - rep.effective_T * np.log(a)))

    write_params(tmp_path / "truth.txt", TRUTH)
    write_series(tmp_path / "y.csv", simulate_path(TRUTH, 500, np.random.default_rng(80)))
    same = True
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        codes = [
            cli_main(["fit", "--data", str(tmp_path / "y.csv"), "--p", "1", "--M", "2",
                      "--populations", "2", "--seed", "11", "--out", str(d / "fit")]),
            cli_main(["simulate", "--params", str(tmp_path / "truth.txt"), "--T", "200",
                      "--seed", "12", "--out", str(d / "sim.csv")]),
            cli_main(["forecast", "--params", str(tmp_path / "truth.txt"), "--data",
                      str(tmp_path / "y.csv"), "--horizon", "22", "--paths", "5000",
                      "--seed", "13", "--out", str(d / "fc.csv")]),
        ]
        same &= codes == [0, 0, 0]
    for rel in ("fit/params.txt", "fit/estimates.csv", "fit/criteria.csv",
                "fit/mixing_weights.csv", "sim.csv", "fc.csv"):
        same &= filecmp.cmp(tmp_path / "a" / rel, tmp_path / "b" / rel, shallow=False)
    ok = idem and perm_err <= 1e-12 and affine_err <= 1e-8 and same
    record(8, ok, f"canonical idempotent {idem}; permutation rel err {perm_err:.1e}; "
                  f"affine err {affine_err:.1e}; seeded CLI outputs identical {same}")


def report_lines():
    return [
        f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        for n, (ok, detail) in sorted(RESULTS.items())
    ]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
