"""Experiment orchestration: config files, comparison reports, file output.

A single JSON config drives all subcommands; CLI flags override file
values. Schema (defaults in parens):

    {
      "lambda": 20.0,                     # arrival rate, required
      "delay": {"type": "fixed", "h": 5.0},   # required
      "horizon": 300.0,                   # required
      "seed": 42,                         # (0; TANGLE_SEED env as fallback)
      "arrival": "poisson",               # or "deterministic"
      "sample_interval": 1.0,
      "runs": 150,
      "fluid_dt": 0.01,
      "stationary_tol": 1e-9,
      "stationary_window": [150.0, 300.0],  # (second half of horizon)
      "out": "results",
      "write_runs": false,
      "workers": 1
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import backend_name
from .delays import delay_from_config
from .fluid import solve_pde
from .simulate import EnsembleResult, SimConfig, ensemble
from .stationary import solve_stationary

SEED_ENV_VAR = "TANGLE_SEED"

_SIM_KEYS = {"lambda", "delay", "horizon", "seed", "arrival", "sample_interval"}
_EXTRA_KEYS = {
    "runs", "fluid_dt", "stationary_tol", "stationary_window",
    "out", "write_runs", "workers",
}


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: simulation, solvers, and output."""

    sim: SimConfig
    runs: int = 150
    fluid_dt: float = 0.01
    stationary_tol: float = 1e-9
    stationary_window: tuple[float, float] | None = None
    out: str = "results"
    write_runs: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not self.fluid_dt > 0:
            raise ConfigError(f"fluid_dt must be positive, got {self.fluid_dt}")
        if not self.stationary_tol > 0:
            raise ConfigError(
                f"stationary_tol must be positive, got {self.stationary_tol}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.stationary_window is not None:
            lo, hi = self.stationary_window
            if not (0 <= lo < hi <= self.sim.horizon):
                raise ConfigError(
                    f"stationary_window must satisfy 0 <= lo < hi <= horizon, "
                    f"got {self.stationary_window}"
                )

    def window(self) -> tuple[float, float]:
        if self.stationary_window is not None:
            return self.stationary_window
        return (self.sim.horizon / 2.0, self.sim.horizon)

    def echo(self) -> dict:
        """JSON-safe form that reparses to an identical config."""
        return {
            "lambda": self.sim.rate,
            "delay": self.sim.delay.to_config(),
            "horizon": self.sim.horizon,
            "seed": int(self.sim.seed),
            "arrival": self.sim.arrival,
            "sample_interval": self.sim.sample_interval,
            "runs": self.runs,
            "fluid_dt": self.fluid_dt,
            "stationary_tol": self.stationary_tol,
            "stationary_window": list(self.window()),
            "out": self.out,
            "write_runs": self.write_runs,
            "workers": self.workers,
        }


def experiment_from_mapping(data: dict) -> ExperimentConfig:
    """Validate a config mapping (already merged with any overrides)."""
    unknown = set(data) - _SIM_KEYS - _EXTRA_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    missing = [k for k in ("lambda", "delay", "horizon") if k not in data]
    if missing:
        raise ConfigError(f"config is missing required fields: {missing}")

    seed = data.get("seed")
    if seed is None:
        seed = _seed_from_env()
    try:
        delay = delay_from_config(data["delay"])
        sim = SimConfig(
            rate=float(data["lambda"]),
            delay=delay,
            horizon=float(data["horizon"]),
            seed=int(seed),
            arrival=str(data.get("arrival", "poisson")),
            sample_interval=float(data.get("sample_interval", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    window = data.get("stationary_window")
    if window is not None:
        try:
            lo, hi = (float(x) for x in window)
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"stationary_window must be a [lo, hi] pair, got {window!r}"
            ) from exc
        window = (lo, hi)
    try:
        return ExperimentConfig(
            sim=sim,
            runs=int(data.get("runs", 150)),
            fluid_dt=float(data.get("fluid_dt", 0.01)),
            stationary_tol=float(data.get("stationary_tol", 1e-9)),
            stationary_window=window,
            out=str(data.get("out", "results")),
            write_runs=bool(data.get("write_runs", False)),
            workers=int(data.get("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _seed_from_env() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def build_experiment(config_path=None, overrides=None) -> ExperimentConfig:
    """File values merged with CLI overrides (overrides win)."""
    data = load_config_file(config_path) if config_path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return experiment_from_mapping(data)


def run_ensemble(cfg: ExperimentConfig, keep_runs=None) -> EnsembleResult:
    if keep_runs is None:
        keep_runs = cfg.write_runs
    return ensemble(cfg.sim, cfg.runs, workers=cfg.workers, keep_runs=keep_runs)


def write_simulation_outputs(cfg: ExperimentConfig, ens: EnsembleResult,
                             out_dir) -> dict:
    """Emit ensemble.csv (+ per-run CSVs) and summary.json; return the summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ens.to_csv(out_dir / "ensemble.csv")
    if cfg.write_runs and ens.trajectories is not None:
        for traj in ens.trajectories:
            traj.to_csv(out_dir / f"run_{traj.run_index}.csv")
    window = cfg.window()
    summary = {
        "config": cfg.echo(),
        "seeds": ens.seeds,
        "stationary_window": list(window),
        "time_avg_L": ens.time_average(window),
        "backend": backend_name(),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def build_comparison(cfg: ExperimentConfig):
    """Run prediction, density solve, and Monte Carlo on the same parameters.

    Relative errors use the Monte Carlo mean as the reference value.
    """
    stat = solve_stationary(cfg.sim.delay, tol=cfg.stationary_tol)
    predicted = stat.expected_tips(cfg.sim.rate)

    grid = solve_pde(cfg.sim.delay, cfg.sim.horizon, cfg.fluid_dt)
    fluid_tips = cfg.sim.rate * grid.final

    ens = run_ensemble(cfg)
    window = cfg.window()
    mask = (ens.t >= window[0]) & (ens.t <= window[1])
    mc_mean = float(ens.mean[mask].mean())
    mc_std = float(ens.std[mask].mean())

    report = {
        "config": cfg.echo(),
        "seeds": ens.seeds,
        "stationary_window": list(window),
        "backend": backend_name(),
        "prediction": {
            "scaled_tips": stat.scaled_tips,
            "expected_tips": predicted,
            "residual": stat.residual,
            "iterations": stat.iterations,
        },
        "fluid": {
            "scaled_tips_final": grid.final,
            "expected_tips": fluid_tips,
        },
        "monte_carlo": {
            "stationary_mean": mc_mean,
            "stationary_std": mc_std,
            "n_runs": ens.n_runs,
        },
        "relative_error": {
            "prediction_vs_mc": abs(predicted - mc_mean) / mc_mean,
            "fluid_vs_mc": abs(fluid_tips - mc_mean) / mc_mean,
        },
    }
    return report, ens, grid


def write_comparison_outputs(cfg: ExperimentConfig, report: dict,
                             ens: EnsembleResult, grid, out_dir) -> None:
    """Emit report.json, combined.csv, ensemble.csv, and fluid.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    ens.to_csv(out_dir / "ensemble.csv")
    grid.to_csv(out_dir / "fluid.csv")
    fluid_on_samples = cfg.sim.rate * np.interp(ens.t, grid.t, grid.scaled_tips)
    lines = ["t,mc_mean,mc_std,mc_min,mc_max,fluid_L"]
    for i in range(len(ens.t)):
        lines.append(
            f"{float(ens.t[i])!r},{float(ens.mean[i])!r},{float(ens.std[i])!r},"
            f"{int(ens.min[i])},{int(ens.max[i])},{float(fluid_on_samples[i])!r}"
        )
    (out_dir / "combined.csv").write_text("\n".join(lines) + "\n")
