import filecmp

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import TRUTH
from stmar import io
from stmar.cli import main
from stmar.exceptions import DomainError, IngestionError
from stmar.simulator import simulate_path


class TestIngest:
    def test_dated_log(self, tmp_path):
        f = tmp_path / "rk.csv"
        f.write_text("date,rk\n2000-01-03,0.5\n2000-01-04,2.0\n2000-01-05,1.0\n")
        ds = io.ingest(f, transform="log")
        assert_allclose(ds.values, np.log([0.5, 2.0, 1.0]))
        assert ds.labels == ["2000-01-03", "2000-01-04", "2000-01-05"]
        assert ds.transform_applied == "log"

    def test_nan_line(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("date,rk\na,1.0\nb,NaN\nc,2.0\n")
        with pytest.raises(IngestionError, match="line 3"):
            io.ingest(f)

    def test_unparseable_and_missing(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("1.0\n2.0\nabc\n")
        with pytest.raises(IngestionError, match="line 3, column 0"):
            io.ingest(f)
        f.write_text("x,1.0\ny,\n")
        with pytest.raises(IngestionError, match="line 2"):
            io.ingest(f)

    def test_nonpositive_log(self, tmp_path):
        f = tmp_path / "neg.csv"
        f.write_text("1.0\n0.0\n")
        with pytest.raises(DomainError, match="line 2"):
            io.ingest(f, transform="log")

    def test_column_selection(self, tmp_path):
        f = tmp_path / "multi.csv"
        f.write_text("date,a,b\nd1,1,10\nd2,2,20\n")
        assert_allclose(io.ingest(f, column="a").values, [1, 2])
        assert_allclose(io.ingest(f, column=2).values, [10, 20])
        with pytest.raises(IngestionError):
            io.ingest(f, column="zzz")

    def test_roundtrip(self, tmp_path):
        y = simulate_path(TRUTH, 300, np.random.default_rng(0))
        io.write_series(tmp_path / "y.csv", y)
        back = io.ingest(tmp_path / "y.csv").values
        assert np.array_equal(back, np.array([float(f"{v:.12g}") for v in y]))
        assert_allclose(back, y, rtol=1e-11)

    def test_config(self, tmp_path):
        f = tmp_path / "c.cfg"
        f.write_text("# comment\na = 1\nb=two  # trailing\n\n")
        assert io.read_config(f) == {"a": "1", "b": "two"}
        f.write_text("novalue\n")
        with pytest.raises(IngestionError):
            io.read_config(f)


@pytest.fixture
def workdir(tmp_path):
    io.write_params(tmp_path / "truth.txt", TRUTH)
    io.write_series(tmp_path / "sim.csv", simulate_path(TRUTH, 600, np.random.default_rng(1)))
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


class TestCommands:
    def test_fit_then_simulate(self, workdir, capsys):
        out = workdir / "fit"
        assert run("fit", "--data", workdir / "sim.csv", "--p", 1, "--M", 2,
                   "--populations", 1, "--seed", 3, "--out", out) == 0
        for name in ("params.txt", "estimates.csv", "criteria.csv", "mixing_weights.csv"):
            assert (out / name).exists()
        est = np.genfromtxt(out / "estimates.csv", delimiter=",", names=True, dtype=None, encoding=None)
        assert est.size == 9
        w = np.loadtxt(out / "mixing_weights.csv", delimiter=",", skiprows=1)
        assert w.shape == (599, 3)
        assert np.all((w[:, 1:] > 0) & (w[:, 1:] < 1))
        assert run("simulate", "--params", out / "params.txt", "--T", 50, "--seed", 2,
                   "--out", workdir / "s.csv") == 0
        assert io.ingest(workdir / "s.csv").values.size == 50

    def test_fit_config_file(self, workdir):
        cfg = workdir / "fit.cfg"
        cfg.write_text("n_populations = 1\nga_generations = 2\nlocal_max_iters = 5\n")
        assert run("fit", "--data", workdir / "sim.csv", "--p", 1, "--M", 1, "--config", cfg,
                   "--exact-likelihood", "--out", workdir / "f") == 0
        cfg.write_text("bogus = 1\n")
        assert run("fit", "--data", workdir / "sim.csv", "--p", 1, "--M", 1, "--config", cfg,
                   "--out", workdir / "f") == 1

    def test_forecast_deterministic(self, workdir):
        args = ["forecast", "--params", workdir / "truth.txt", "--data", workdir / "sim.csv",
                "--horizon", 1, "--paths", 1, "--seed", 7]
        assert run(*args, "--out", workdir / "a.csv") == 0
        assert run(*args, "--out", workdir / "b.csv") == 0
        assert filecmp.cmp(workdir / "a.csv", workdir / "b.csv", shallow=False)

    def test_forecast_intervals(self, workdir):
        assert run("forecast", "--params", workdir / "truth.txt", "--data", workdir / "sim.csv",
                   "--horizon", 5, "--paths", 2000, "--levels", "0.9,0.99", "--sided", "two-sided",
                   "--target", "exp-cumulative", "--out", workdir / "iv.csv") == 0
        iv = np.genfromtxt(workdir / "iv.csv", delimiter=",", names=True)
        assert iv.size == 5
        assert np.all(iv["lower_099"] <= iv["lower_09"]) and np.all(iv["upper_09"] <= iv["upper_099"])
        assert np.all(np.diff(iv["median"]) > 0)

    def test_simulate_stdout(self, workdir, capsys):
        assert run("simulate", "--params", workdir / "truth.txt", "--T", 3, "--seed", 1) == 0
        assert capsys.readouterr().out.count("\n") == 4

    def test_errors(self, workdir, capsys):
        assert run("simulate", "--params", workdir / "missing.txt", "--T", 3, "--seed", 1) == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("stmar: error:")
        (workdir / "neg.csv").write_text("1.0\n-1.0\n")
        assert run("forecast", "--params", workdir / "truth.txt", "--data", workdir / "neg.csv",
                   "--log", "--horizon", 1, "--out", workdir / "x.csv") == 1
        assert "line 2" in capsys.readouterr().err

    def test_evaluate(self, workdir):
        io.write_series(workdir / "long.csv", simulate_path(TRUTH, 700, np.random.default_rng(2)))
        spec = workdir / "eval.cfg"
        spec.write_text(
            "data = long.csv\ntransform = none\nin_sample = 650\nout = res\n"
            "params = truth.txt\nar_order = 2\npaths = 500\naggregations = 1,5\n"
            "sided = upper,two-sided\n"
        )
        assert run("evaluate", "--spec", spec) == 0
        res = workdir / "res"
        cov = np.genfromtxt(res / "coverage.csv", delimiter=",", names=True, dtype=None, encoding=None)
        assert cov.size == 3 * 2 * 2 * 3
        grid = np.loadtxt(res / "density_grid.csv", delimiter=",", skiprows=1)
        assert grid.shape == (200, 2) and np.all(grid[:, 1] > 0)
        assert (res / "losses.csv").exists()

    def test_evaluate_missing_key(self, workdir):
        spec = workdir / "eval.cfg"
        spec.write_text("data = sim.csv\n")
        assert run("evaluate", "--spec", spec) == 1
