"""Sphere optimizers, line search, and run records."""

from .baselines import ADAM_GRID, QNG_GRID, adam_run, adam_single, flat_cg_run, qng_run, qng_step
from .egt_cg import (
    OptimizerState,
    beta_hybrid,
    descent_direction,
    egt_cg_run,
    egt_step,
    initial_state,
    vector_transport_scaled,
    wolfe_line_search,
)
from .linesearch import golden_section, power_method_step, strong_wolfe
from .params import CGParams
from .trace import CSV_COLUMNS, EpochRecord, RunTrace, wolfe_audit

OPTIMIZERS = ("egt", "egt-cg", "qng1", "qng2", "flat-cg", "adam")


def run_optimizer(name: str, H, x0, params: CGParams = CGParams(), e0=None) -> RunTrace:
    """Dispatch by optimizer name."""
    if name == "egt-cg":
        return egt_cg_run(H, x0, params, e0)
    if name == "egt":
        return egt_cg_run(H, x0, params, e0, conjugate=False)
    if name in ("qng1", "qng2"):
        return qng_run(H, x0, params, int(name[-1]), e0)
    if name == "flat-cg":
        return flat_cg_run(H, x0, params, e0)
    if name == "adam":
        return adam_run(H, x0, params, e0=e0)
    raise ValueError(f"unknown optimizer {name!r}; choose from {OPTIMIZERS}")


__all__ = [
    "ADAM_GRID", "CSV_COLUMNS", "CGParams", "EpochRecord", "OPTIMIZERS", "OptimizerState", "QNG_GRID",
    "RunTrace", "adam_run", "adam_single", "beta_hybrid", "descent_direction", "egt_cg_run", "egt_step",
    "flat_cg_run", "golden_section", "initial_state", "power_method_step", "qng_run", "qng_step",
    "run_optimizer", "strong_wolfe", "vector_transport_scaled", "wolfe_audit", "wolfe_line_search",
]
