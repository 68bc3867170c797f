"""
Command-line front end: ``stmar fit | simulate | forecast | evaluate``.

All numeric output uses 12 significant digits. Errors are reported as a
single ``stmar: error: ...`` line on stderr with exit status 1.
"""

import argparse
import csv
import dataclasses
import os
import sys
import warnings

import numpy as np

from . import benchmark, io, simulator
from .estimator import FitConfig, fit
from .exceptions import EstimationError, IngestionError
from .model import log_stationary_marginal, parameter_names

_TARGETS = {"exp-cumulative": simulator.EXP_CUMULATIVE, "level": simulator.LEVEL}
_SIDES = {"upper": simulator.UPPER, "two-sided": simulator.TWO_SIDED}


class CliError(Exception):
    pass


def _fmt(v):
    return f"{v:.12g}"


def _parse_list(text, cast=float):
    return [cast(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {text!r}")


def fit_config_from(mapping, **overrides):
    """Build a :class:`FitConfig` from string values keyed by field name."""
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(FitConfig)}
    for key, raw in mapping.items():
        if key not in fields or key == "initial_guesses":
            raise CliError(f"unknown fit setting {key!r}")
        default = fields[key].default
        if isinstance(default, bool):
            kwargs[key] = _parse_bool(raw)
        elif isinstance(default, float):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = None if str(raw).lower() == "none" else int(raw)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return FitConfig(**kwargs)


def _load_series(path, column, log):
    col = column
    if col is not None and col.lstrip("-").isdigit():
        col = int(col)
    return io.ingest(path, column=col, transform="log" if log else "none")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def write_fit_outputs(out_dir, result, labels=None):
    """Parameter file, estimates table, criteria and mixing-weight series."""
    os.makedirs(out_dir, exist_ok=True)
    params = result.params
    io.write_params(os.path.join(out_dir, "params.txt"), params)
    names = parameter_names(params.p, params.M)
    theta = params.to_vector()
    _write_rows(
        os.path.join(out_dir, "estimates.csv"),
        ["parameter", "estimate", "std_error"],
        [(n, float(v), float(s)) for n, v, s in zip(names, theta, result.std_errors)],
    )
    _write_rows(
        os.path.join(out_dir, "criteria.csv"),
        ["loglik", "k", "effective_T", "aic", "hqc", "bic"],
        [(float(result.sum_loglik), params.n_params, result.effective_T, *map(float, result.criteria))],
    )
    w = result.mixing_series
    p = params.p
    t_labels = labels[p:] if labels else range(p + 1, p + 1 + w.shape[0])
    _write_rows(
        os.path.join(out_dir, "mixing_weights.csv"),
        ["t"] + [f"alpha_{m}" for m in range(1, params.M + 1)],
        [(lab, *map(float, row)) for lab, row in zip(t_labels, w)],
    )


def cmd_fit(args):
    settings = io.read_config(args.config) if args.config else {}
    config = fit_config_from(
        settings,
        seed=args.seed,
        n_populations=args.populations,
        exact_likelihood=True if args.exact_likelihood else None,
    )
    ds = _load_series(args.data, args.column, args.log)
    callback = None
    if args.verbose:
        def callback(pop, gen, best):
            print(f"population {pop} generation {gen} best {best:.6f}", file=sys.stderr)
    result = fit(ds.values, args.p, args.M, config, callback=callback)
    write_fit_outputs(args.out, result, ds.labels)
    print(f"loglik={_fmt(result.sum_loglik)} aic={_fmt(result.aic)} "
          f"hqc={_fmt(result.hqc)} bic={_fmt(result.bic)}")
    return 0


def cmd_simulate(args):
    params = io.read_params(args.params)
    rng = np.random.default_rng(args.seed)
    path = simulator.simulate_path(params, args.T, rng)
    if args.out == "-":
        w = csv.writer(sys.stdout)
        w.writerow(["t", "value"])
        for i, v in enumerate(path, start=1):
            w.writerow([i, _fmt(v)])
    else:
        io.write_series(args.out, path)
    return 0


def cmd_forecast(args):
    params = io.read_params(args.params)
    ds = _load_series(args.data, args.column, args.log)
    rng = np.random.default_rng(args.seed)
    fp = simulator.forecast(params, ds.values, args.horizon, args.paths, rng, _TARGETS[args.target])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        intervals = simulator.prediction_intervals(fp, _parse_list(args.levels), _SIDES[args.sided])
    simulator.write_intervals_csv(args.out, intervals, median=fp.median())
    return 0


_EVAL_DEFAULTS = {
    "column": None,
    "transform": "log",
    "p": "1",
    "M": "2",
    "ar_order": "11",
    "har": "true",
    "aggregations": "1,5,10,22",
    "levels": "0.99,0.95,0.9",
    "sided": "upper",
    "target": "exp-cumulative",
    "paths": "500000",
    "seed": "0",
    "grid_points": "200",
    "reference": None,
    "params": None,
}


def run_evaluate(spec, base_dir="."):
    """Run the evaluation workflow described by a key=value mapping.

    Required keys are ``data``, ``in_sample`` (number of in-sample
    observations) and ``out`` (output directory). Keys prefixed ``fit.`` are
    passed to :class:`FitConfig`; ``params`` names a parameter file to use
    instead of fitting the StMAR model.
    """
    fit_keys = {k[4:]: v for k, v in spec.items() if k.startswith("fit.")}
    opts = dict(_EVAL_DEFAULTS)
    opts.update({k: v for k, v in spec.items() if not k.startswith("fit.")})
    for key in ("data", "in_sample", "out"):
        if key not in opts:
            raise CliError(f"evaluation spec is missing {key!r}")
    unknown = set(opts) - set(_EVAL_DEFAULTS) - {"data", "in_sample", "out"}
    if unknown:
        raise CliError(f"unknown evaluation setting(s): {', '.join(sorted(unknown))}")

    def resolve(path):
        return path if os.path.isabs(path) else os.path.join(base_dir, path)

    transform = opts["transform"]
    if transform not in ("log", "none"):
        raise CliError("transform must be 'log' or 'none'")
    if opts["target"] not in _TARGETS:
        raise CliError(f"target must be one of {sorted(_TARGETS)}")
    sided = [_SIDES[s] if s in _SIDES else None for s in _parse_list(opts["sided"], str)]
    if None in sided:
        raise CliError(f"sided must be drawn from {sorted(_SIDES)}")

    col = opts["column"]
    ds = _load_series(resolve(opts["data"]), col, transform == "log")
    n_in = int(opts["in_sample"])
    if not 0 < n_in < ds.values.size:
        raise CliError(f"in_sample must lie in (0, {ds.values.size})")
    history, oos = ds.values[:n_in], ds.values[n_in:]
    out_dir = resolve(opts["out"])
    os.makedirs(out_dir, exist_ok=True)

    p, M = int(opts["p"]), int(opts["M"])
    if opts["params"]:
        stmar = io.read_params(resolve(opts["params"]))
    else:
        seed = int(opts["seed"])
        config = fit_config_from(fit_keys, seed=seed if "seed" not in fit_keys else None)
        result = fit(history, p, M, config)
        write_fit_outputs(out_dir, result, ds.labels[:n_in] if ds.labels else None)
        stmar = result.params

    models = [("StMAR", stmar), (f"AR({int(opts['ar_order'])})", benchmark.fit_ar_ols(history, int(opts["ar_order"])))]
    if _parse_bool(opts["har"]):
        models.append(("HAR", benchmark.fit_har(history)))
    table = benchmark.coverage_eval(
        models,
        oos,
        history,
        aggregations=_parse_list(opts["aggregations"], int),
        levels=_parse_list(opts["levels"]),
        sided=sided,
        n_paths=int(opts["paths"]),
        seed=int(opts["seed"]),
        target=_TARGETS[opts["target"]],
    )
    table.to_csv(os.path.join(out_dir, "coverage.csv"))
    reference = opts["reference"] or models[1][0]
    if reference not in table.models:
        raise CliError(f"reference model {reference!r} is not among {table.models}")
    table.losses_to_csv(os.path.join(out_dir, "losses.csv"), reference=reference)

    lo, hi = history.min(), history.max()
    pad = 0.1 * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, int(opts["grid_points"]))
    dens = np.exp(log_stationary_marginal(stmar, grid))
    _write_rows(os.path.join(out_dir, "density_grid.csv"), ["x", "density"],
                [(float(x), float(d)) for x, d in zip(grid, dens)])
    return table


def cmd_evaluate(args):
    spec = io.read_config(args.spec)
    table = run_evaluate(spec, base_dir=os.path.dirname(os.path.abspath(args.spec)))
    for row in table.rows():
        print(f"{row['model']:>8} {row['aggregation']:>9} {row['sided']:>15} "
              f"{row['level']:.2f} {row['coverage_pct']:.2f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="stmar", description="StMAR modelling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("--data", required=True, help="comma-delimited input file")
        sp.add_argument("--column", default=None, help="column index (0-based) or header name")
        sp.add_argument("--log", action="store_true", help="take natural logs of the column")

    f = sub.add_parser("fit", help="estimate an StMAR(p, M) model")
    data_args(f)
    f.add_argument("--p", type=int, required=True)
    f.add_argument("--M", type=int, required=True)
    f.add_argument("--config", help="key=value file of estimator settings")
    f.add_argument("--exact-likelihood", action="store_true")
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--populations", type=int, default=None)
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--verbose", action="store_true")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="simulate a path from a parameter file")
    s.add_argument("--params", required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", default="-", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_simulate)

    fc = sub.add_parser("forecast", help="Monte-Carlo prediction intervals")
    fc.add_argument("--params", required=True)
    data_args(fc)
    fc.add_argument("--horizon", type=int, required=True)
    fc.add_argument("--paths", type=int, default=500_000)
    fc.add_argument("--levels", default="0.99,0.95,0.9")
    fc.add_argument("--sided", choices=sorted(_SIDES), default="upper")
    fc.add_argument("--target", choices=sorted(_TARGETS), default="level")
    fc.add_argument("--seed", type=int, default=0)
    fc.add_argument("--out", required=True)
    fc.set_defaults(func=cmd_forecast)

    e = sub.add_parser("evaluate", help="out-of-sample coverage and loss evaluation")
    e.add_argument("--spec", required=True, help="key=value evaluation spec")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EstimationError as exc:
        print(f"stmar: error: estimation failed: {exc}", file=sys.stderr)
    except (CliError, IngestionError, ValueError, ArithmeticError, np.linalg.LinAlgError,
            OSError, KeyError, TypeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"stmar: error: {type(exc).__name__}: {msg}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
