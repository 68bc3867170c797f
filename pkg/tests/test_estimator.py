import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import TRUTH
from stmar import estimator
from stmar.ar_core import ComponentParams
from stmar.benchmark import fit_ar_ols
from stmar.estimator import FitConfig, fit, numerical_hessian, std_errors
from stmar.exceptions import EstimationError
from stmar.likelihood import cond_loglik, validate
from stmar.model import StmarParams, canonicalize
from stmar.simulator import simulate_path

FAST = dict(n_populations=2, ga_generations=10)

# StMAR(4,1) column of the empirical table
TABLE_41 = StmarParams([ComponentParams(-0.746, [0.428, 0.224, 0.121, 0.150], 0.298, 11.999)], [1.0])


@pytest.fixture(scope="module")
def data_12():
    return simulate_path(TRUTH, 1500, np.random.default_rng(77))


@pytest.fixture(scope="module")
def fit_12(data_12):
    return fit(data_12, 1, 2, FitConfig(seed=5, initial_guesses=(TRUTH,), **FAST))


class TestFit:
    def test_dominates_truth(self, fit_12, data_12):
        assert fit_12.diagnostics["injected_guesses"] == 1
        assert fit_12.sum_loglik >= cond_loglik(TRUTH, data_12).sum_loglik

    def test_result_contract(self, fit_12):
        res = fit_12
        assert validate(res.params) == []
        assert canonicalize(res.params) is res.params
        for start in res.diagnostics["starts"]:
            assert res.sum_loglik >= start["value"] - 1e-9 * abs(start["value"])
        assert res.mixing_series.shape == (1499, 2)
        assert_allclose(res.mixing_series.sum(axis=1), 1.0, atol=1e-12)
        assert res.std_errors.shape == (9,)
        assert res.diagnostics["hessian_ok"]
        assert res.aic < res.bic

    def test_hessian_symmetric(self, fit_12):
        H = fit_12.hessian
        assert np.max(np.abs(H - H.T)) < 1e-6 * np.max(np.abs(H))

    def test_near_truth(self, fit_12):
        est = fit_12.params
        assert abs(est.components[0].phi[0] - 0.85) < 0.1
        assert abs(est.alphas[0] - 0.6) < 0.15

    def test_ols_oracle_gaussian_ar1(self):
        rng = np.random.default_rng(3)
        y = np.empty(3000)
        y[0] = 1.25
        for t in range(1, y.size):
            y[t] = 0.5 + 0.6 * y[t - 1] + rng.standard_normal()
        res = fit(y, 1, 1, FitConfig(seed=1, **FAST))
        ols = fit_ar_ols(y, 1)
        c = res.params.components[0]
        assert abs(c.phi0 - ols.coefficients[0]) < 0.02
        assert abs(c.phi[0] - ols.coefficients[1]) < 0.02
        assert c.nu > 50

    def test_table_se_magnitude(self):
        y = simulate_path(TABLE_41, 3597, np.random.default_rng(41))
        res = fit(y, 4, 1, FitConfig(seed=2, **FAST))
        assert res.effective_T == 3593
        se = res.std_errors[1]
        assert 0.017 / 2 <= se <= 0.017 * 2

    def test_deterministic(self, data_12):
        cfg = FitConfig(seed=9, n_populations=1, ga_generations=5)
        a = fit(data_12[:600], 1, 2, cfg)
        b = fit(data_12[:600], 1, 2, cfg)
        assert np.array_equal(a.params.to_vector(), b.params.to_vector())
        assert np.array_equal(a.std_errors, b.std_errors, equal_nan=True)
        assert a.sum_loglik == b.sum_loglik

    def test_parallel_matches_serial(self, data_12):
        cfg = dict(seed=4, n_populations=2, ga_generations=3, local_max_iters=20)
        a = fit(data_12[:400], 1, 2, FitConfig(n_jobs=1, **cfg))
        b = fit(data_12[:400], 1, 2, FitConfig(n_jobs=2, **cfg))
        assert np.array_equal(a.params.to_vector(), b.params.to_vector())

    def test_callback(self, data_12):
        seen = []
        fit(data_12[:300], 1, 1, FitConfig(n_populations=1, ga_generations=3),
            callback=lambda *a: seen.append(a))
        assert [s[1] for s in seen] == [0, 1, 2]

    def test_too_short(self):
        with pytest.raises(ValueError):
            fit(np.arange(8.0), 1, 2)

    def test_all_starts_fail(self, monkeypatch, data_12):
        monkeypatch.setattr(estimator._Objective, "loglik_params", lambda self, p: -np.inf)
        with pytest.raises(EstimationError) as info:
            fit(data_12[:200], 1, 2, FitConfig(n_populations=2, ga_generations=2))
        assert len(info.value.diagnostics["starts"]) == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FitConfig(n_populations=0)
        with pytest.raises(ValueError):
            FitConfig(nu_cap=2.0)


class TestHessian:
    def test_quadratic(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((5, 5))
        A = a @ a.T + 5 * np.eye(5)
        H = numerical_hessian(lambda x: -0.5 * x @ A @ x, rng.standard_normal(5))
        assert_allclose(H, -A, rtol=1e-4, atol=1e-4 * np.max(np.abs(A)))

    def test_std_errors(self):
        H = -np.diag([4.0, 100.0])
        se, ok = std_errors(H)
        assert ok
        assert_allclose(se, [0.5, 0.1])

    def test_indefinite_fallback(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            se, ok = std_errors(np.diag([-4.0, 1.0]))
        assert not ok and caught
        assert se[0] == pytest.approx(0.5)
