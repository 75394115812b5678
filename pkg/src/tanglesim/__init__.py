"""Tangle growth dynamics: Monte Carlo simulation and fluid-limit solvers.

A tangle is a DAG ledger where every new transaction approves two earlier
ones chosen uniformly from the current tips, after a random proof-of-work
delay. This package simulates that process, integrates its deterministic
large-rate limit, and solves for the stationary tip-count equilibrium.
"""

from ._kernels import available_backends, backend_name
from .delays import (
    DegenerateDelayError,
    DelayModel,
    ExponentialDelay,
    FixedDelay,
    UniformDelay,
    delay_from_config,
)
from .fluid import DdeSolution, FluidGrid, approval_rate, solve_dde_fixed, solve_pde
from .harness import ConfigError, ExperimentConfig, build_experiment
from .simulate import (
    EnsembleResult,
    SimConfig,
    SimTrajectory,
    Tangle,
    TipSet,
    ValidationReport,
    ensemble,
    run,
    select_tips,
    validate_dag,
)
from .stationary import (
    StationaryResult,
    StationarySolverError,
    predict_mean_tips,
    solve_stationary,
    stationary_profile,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateDelayError",
    "DelayModel",
    "FixedDelay",
    "ExponentialDelay",
    "UniformDelay",
    "delay_from_config",
    "SimConfig",
    "SimTrajectory",
    "Tangle",
    "TipSet",
    "EnsembleResult",
    "ValidationReport",
    "run",
    "ensemble",
    "select_tips",
    "validate_dag",
    "FluidGrid",
    "DdeSolution",
    "solve_pde",
    "solve_dde_fixed",
    "approval_rate",
    "StationaryResult",
    "StationarySolverError",
    "solve_stationary",
    "stationary_profile",
    "predict_mean_tips",
    "ExperimentConfig",
    "ConfigError",
    "build_experiment",
    "backend_name",
    "available_backends",
]
