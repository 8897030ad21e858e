"""Command-line front end.

Subcommands: ``discover`` runs a method on a CSV time series and writes
the graph JSON, ``simulate`` draws and simulates a synthetic model,
``benchmark`` executes a sweep from a config file, and ``verify`` runs
one of the property suites. Exit codes are fixed for scripting: 0 ok,
1 property violation, 2 malformed input, 3 insufficient data,
4 generation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import BenchConfig, GenerationError, generate_realization, run_sweep, write_rows_csv
from .citests import Dataset, InsufficientDataError
from .discovery import METHODS, run_discovery
from .orientation import RULES
from .scm import GenConfig, ScmModel, simulate
from .verify import SUITE_NAMES, run_suite

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_INPUT = 2
EXIT_DATA = 3
EXIT_GENERATION = 4


def _default_jobs():
    try:
        return max(1, int(os.environ.get("TSCAUSAL_JOBS", "1")))
    except ValueError:
        return 1


def _fail(code, message):
    print("error: %s" % message, file=sys.stderr)
    return code


def _cmd_discover(args):
    if args.tau_max < 1:
        return _fail(EXIT_INPUT, "the lagged phase requires --tau-max >= 1")
    try:
        data = Dataset.from_csv(args.input)
    except OSError as exc:
        return _fail(EXIT_INPUT, "cannot read %s: %s" % (args.input, exc))
    except ValueError as exc:
        return _fail(EXIT_INPUT, "malformed input: %s" % exc)
    if data.n_times <= args.tau_max + 10:
        return _fail(EXIT_DATA,
                     "need more than tau_max + 10 = %d rows, got %d"
                     % (args.tau_max + 10, data.n_times))
    try:
        result = run_discovery(data, args.tau_max, args.alpha,
                               method=args.method, rule=args.rule)
    except InsufficientDataError as exc:
        return _fail(EXIT_DATA, str(exc))
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))

    payload = result.to_dict()
    payload["config"] = {
        "input": args.input,
        "tau_max": args.tau_max,
        "alpha": args.alpha,
        "method": args.method,
        "rule": args.rule,
        "ci_test": args.ci_test,
    }
    with open(args.output, "w") as fh:
        json.dump(payload, fh, indent=2)
    print("wrote %s" % args.output)
    return EXIT_OK


def _cmd_simulate(args):
    rng = np.random.default_rng(args.seed)
    if args.spec is not None:
        try:
            model = ScmModel.from_json(args.spec)
        except OSError as exc:
            return _fail(EXIT_INPUT, "cannot read %s: %s" % (args.spec, exc))
        except (ValueError, KeyError) as exc:
            return _fail(EXIT_INPUT, "malformed model spec: %s" % exc)
        data = None
        for k in range(args.max_redraws):
            data = simulate(model, args.T, burn_in=args.burn_in,
                            rng=np.random.default_rng(args.seed ^ k))
            if data is not None:
                break
        if data is None:
            return _fail(EXIT_GENERATION,
                         "simulation rejected as non-stationary")
    else:
        cfg = GenConfig(n_vars=args.n_vars, autocorr=args.autocorr,
                        weibull_frac=args.weibull_frac,
                        nonlinear_frac=args.nonlinear_frac)
        try:
            model, data = generate_realization(
                cfg, args.T, args.seed, burn_in=args.burn_in,
                max_redraws=args.max_redraws)
        except GenerationError as exc:
            return _fail(EXIT_GENERATION, str(exc))

    data.to_csv(args.output)
    model_path = args.output + ".model.json"
    model.to_json(model_path)
    print("wrote %s and %s" % (args.output, model_path))
    return EXIT_OK


def _cmd_benchmark(args):
    try:
        with open(args.config, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        return _fail(EXIT_INPUT, "cannot read %s: %s" % (args.config, exc))
    try:
        if args.config.endswith(".toml"):
            try:
                import tomllib
            except ImportError:
                import tomli as tomllib
            payload = tomllib.loads(raw.decode())
        else:
            payload = json.loads(raw)
        cfg = BenchConfig.from_dict(payload)
    except (ValueError, TypeError) as exc:
        return _fail(EXIT_INPUT, "malformed benchmark config: %s" % exc)

    jobs = args.jobs if args.jobs is not None else _default_jobs()
    rows = run_sweep(cfg, jobs=jobs)
    write_rows_csv(rows, args.output + ".csv")
    with open(args.output + ".json", "w") as fh:
        json.dump({"config": cfg.to_dict(), "rows": rows}, fh, indent=2)
    print("wrote %s.csv and %s.json" % (args.output, args.output))
    return EXIT_OK


def _cmd_verify(args):
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    result = run_suite(args.suite, n_instances=args.n_instances,
                       seed=args.seed, jobs=jobs)
    for key, value in sorted(result.extras.items()):
        print("%s: %s" % (key, value))
    if result.passed:
        print("suite %s passed on %d instances"
              % (result.suite, result.n_instances))
        return EXIT_OK
    print("suite %s FAILED with %d violation(s)"
          % (result.suite, len(result.failures)))
    for failure in result.failures:
        print(json.dumps(failure), file=sys.stderr)
    return EXIT_PROPERTY


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tscausal",
        description="Causal discovery for stationary multivariate time series")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="run discovery on a CSV time series")
    p.add_argument("--input", required=True, help="CSV file, T rows x N columns")
    p.add_argument("--tau-max", type=int, required=True, dest="tau_max")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--method", choices=METHODS, default="pcmci+")
    p.add_argument("--rule", choices=RULES, default="majority")
    p.add_argument("--ci-test", choices=("parcorr",), default="parcorr",
                   dest="ci_test")
    p.add_argument("--output", required=True, help="graph JSON output path")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("simulate", help="simulate a synthetic model")
    p.add_argument("--spec", help="model spec JSON (omit to draw randomly)")
    p.add_argument("--n-vars", type=int, default=5, dest="n_vars")
    p.add_argument("--autocorr", type=float, default=0.95)
    p.add_argument("--weibull-frac", type=float, default=0.0,
                   dest="weibull_frac")
    p.add_argument("--nonlinear-frac", type=float, default=0.0,
                   dest="nonlinear_frac")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=500, dest="burn_in")
    p.add_argument("--max-redraws", type=int, default=100,
                   dest="max_redraws")
    p.add_argument("--output", required=True, help="dataset CSV output path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("benchmark", help="run a sweep from a config file")
    p.add_argument("--config", required=True, help="JSON or TOML sweep config")
    p.add_argument("--output", required=True,
                   help="output path prefix for .csv and .json")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("--suite", choices=SUITE_NAMES, required=True)
    p.add_argument("--n-instances", type=int, default=None,
                   dest="n_instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GenerationError as exc:
        return _fail(EXIT_GENERATION, str(exc))


if __name__ == "__main__":
    sys.exit(main())
