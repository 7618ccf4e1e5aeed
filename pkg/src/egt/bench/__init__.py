"""Experiment harness: configuration, single runs, sweeps and validation suites."""

from .config import InitSpec, RunConfig, default_seed
from .runner import Problem, build_problem, execute, run_gso, trace_csv
from .sweep import mean_ci, sweep
from .validate import validate

__all__ = [
    "InitSpec", "Problem", "RunConfig", "build_problem", "default_seed", "execute", "mean_ci",
    "run_gso", "sweep", "trace_csv", "validate",
]
