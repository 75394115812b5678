"""Command-line front end.

Subcommands: simulate (Monte Carlo ensemble), fluid (density solve),
stationary (equilibrium prediction), compare (all three plus a report).
Exit codes: 0 success, 1 config error, 2 runtime/numeric error, 3 IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._kernels import backend_name
from .delays import delay_from_config
from .fluid import solve_pde
from .harness import (
    ConfigError,
    build_comparison,
    build_experiment,
    run_ensemble,
    write_comparison_outputs,
    write_simulation_outputs,
)
from .stationary import StationarySolverError, solve_stationary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # flag misuse is a config error (exit 1), not argparse's default 2
        raise ConfigError(message)


def _add_delay_flags(p):
    p.add_argument("--type", choices=("fixed", "exponential", "uniform"),
                   help="delay distribution")
    p.add_argument("--h", type=float, help="fixed delay")
    p.add_argument("--mu", type=float, help="exponential delay rate")
    p.add_argument("--h0", type=float, help="uniform delay lower bound")
    p.add_argument("--h1", type=float, help="uniform delay upper bound")


def _add_common_flags(p):
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, help="base seed (TANGLE_SEED env as fallback)")
    p.add_argument("--lambda", dest="rate", type=float, help="arrival rate")
    p.add_argument("--horizon", type=float)
    p.add_argument("--arrival", choices=("poisson", "deterministic"))
    p.add_argument("--sample-interval", type=float)
    p.add_argument("--out", type=Path, help="output directory")
    _add_delay_flags(p)


def _delay_spec_from_args(args) -> dict | None:
    if args.type is None:
        for flag in ("h", "mu", "h0", "h1"):
            if getattr(args, flag, None) is not None:
                raise ConfigError(f"--{flag} requires --type")
        return None
    params = {"fixed": ("h",), "exponential": ("mu",), "uniform": ("h0", "h1")}[args.type]
    spec = {"type": args.type}
    for name in params:
        value = getattr(args, name)
        if value is None:
            raise ConfigError(f"delay type {args.type!r} requires --{name}")
        spec[name] = value
    return spec


def _experiment_from_args(args):
    overrides = {
        "lambda": args.rate,
        "horizon": args.horizon,
        "seed": args.seed,
        "arrival": args.arrival,
        "sample_interval": args.sample_interval,
        "delay": _delay_spec_from_args(args),
        "runs": getattr(args, "runs", None),
        "fluid_dt": getattr(args, "dt", None),
        "stationary_tol": getattr(args, "tol", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "write_runs", False):
        overrides["write_runs"] = True
    if args.out is not None:
        overrides["out"] = str(args.out)
    return build_experiment(args.config, overrides)


def _cmd_simulate(args) -> int:
    cfg = _experiment_from_args(args)
    ens = run_ensemble(cfg)
    summary = write_simulation_outputs(cfg, ens, cfg.out)
    print(f"wrote {cfg.out}/ensemble.csv and summary.json ({cfg.runs} runs, "
          f"{backend_name()} kernels)")
    print(f"stationary-window mean tip count: {summary['time_avg_L']:.3f}")
    return EXIT_OK


def _cmd_fluid(args) -> int:
    cfg = _experiment_from_args(args)
    grid = solve_pde(cfg.sim.delay, cfg.sim.horizon, cfg.fluid_dt,
                     snapshot_stride=args.dump_grid or 0)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid.to_csv(out_dir / "fluid.csv")
    if args.dump_grid:
        grid.grid_to_csv(out_dir / "grid.csv")
    print(f"wrote {out_dir}/fluid.csv")
    print(f"final rescaled tip count: {grid.final:.6f} "
          f"(expected tips at rate {cfg.sim.rate:g}: {cfg.sim.rate * grid.final:.3f})")
    return EXIT_OK


def _cmd_stationary(args) -> int:
    spec = _delay_spec_from_args(args)
    if spec is None:
        raise ConfigError("stationary needs a delay spec (--type plus parameters)")
    try:
        delay = delay_from_config(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = solve_stationary(delay, tol=args.tol)
    print(f"rescaled tip count l = {result.scaled_tips:.6f}")
    if args.rate is not None:
        print(f"expected tips L = {result.expected_tips(args.rate):.4f} "
              f"(rate {args.rate:g})")
    print(f"residual = {result.residual:.3e}, iterations = {result.iterations}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _experiment_from_args(args)
    report, ens, grid = build_comparison(cfg)
    write_comparison_outputs(cfg, report, ens, grid, cfg.out)
    print(json.dumps(
        {k: report[k] for k in ("prediction", "fluid", "monte_carlo", "relative_error")},
        indent=2,
    ))
    print(f"wrote {cfg.out}/report.json, combined.csv, ensemble.csv, fluid.csv")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tanglesim",
                     description="Tangle growth: Monte Carlo vs fluid-limit predictions")
    parser.add_argument("--version", action="version", version=f"tanglesim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a Monte Carlo ensemble")
    _add_common_flags(p)
    p.add_argument("--runs", type=int, help="number of runs")
    p.add_argument("--write-runs", action="store_true",
                   help="also write one run_<k>.csv per run")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("fluid", help="solve the tip-age density dynamics")
    _add_common_flags(p)
    p.add_argument("--dt", type=float, help="solver step")
    p.add_argument("--dump-grid", type=int, metavar="STRIDE",
                   help="also dump density snapshots every STRIDE steps")
    p.set_defaults(fn=_cmd_fluid)

    p = sub.add_parser("stationary", help="equilibrium tip count prediction")
    _add_delay_flags(p)
    p.add_argument("--lambda", dest="rate", type=float, help="arrival rate")
    p.add_argument("--tol", type=float, default=1e-9, help="solver tolerance")
    p.set_defaults(fn=_cmd_stationary)

    p = sub.add_parser("compare", help="Monte Carlo vs predictions, with report")
    _add_common_flags(p)
    p.add_argument("--runs", type=int, help="number of runs")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--dt", type=float, help="density solver step")
    p.add_argument("--tol", type=float, help="stationary solver tolerance")
    p.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, StationarySolverError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
