"""Single ground-state optimization runs: build, solve exactly, optimize, persist."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..analysis import sample_uniform_sphere
from ..errors import ConfigError
from ..hamiltonian import (
    SubspaceHamiltonian,
    build_tfim,
    build_xxz,
    exact_ground,
    fidelity_to_ground,
    hartree_label,
    load_hamiltonian,
    project_pauli,
    warm_start_state,
)
from ..optimize import CSV_COLUMNS, RunTrace, run_optimizer
from .config import RunConfig, load_vector


@dataclass
class Problem:
    """A projected Hamiltonian with its exact ground data."""

    H: SubspaceHamiltonian
    e0: float
    ground: list
    label: str


def build_problem(config: RunConfig) -> Problem:
    if config.model == "xxz":
        h, basis = build_xxz(config.n, config.delta)
        label = f"xxz n={config.n} delta={config.delta!r}"
    elif config.model == "tfim":
        h, basis = build_tfim(config.n, config.field, config.tfim_k)
        label = f"tfim n={config.n} h={config.field!r} k={config.tfim_k}"
    else:
        h, basis = load_hamiltonian(config.hamiltonian)
        label = f"pauli-file {Path(config.hamiltonian).name}"
    H = project_pauli(h, basis)
    e0, ground = exact_ground(H)
    return Problem(H, e0, ground, label)


def haar_state(d: int, seed: int) -> np.ndarray:
    return sample_uniform_sphere(d, np.random.default_rng(seed))


def starting_point(config: RunConfig, problem: Problem, seed: int) -> np.ndarray:
    basis = problem.H.basis
    init = config.init
    if init.kind == "haar":
        return haar_state(basis.dim, seed)
    if init.kind == "warm":
        if basis.kind == "hw":
            return warm_start_state(basis.n, basis.k, init.alpha)
        k = basis.k if basis.k is not None else basis.n // 2
        try:
            idx = basis.index_of(hartree_label(basis.n, k))
        except KeyError as exc:
            raise ConfigError(f"warm start needs the Hartree label in the basis: {exc}") from exc
        x = np.full(basis.dim, math.sqrt((1.0 - init.alpha) / (basis.dim - 1)))
        x[idx] = math.sqrt(init.alpha)
        return x
    x = load_vector(init.path)
    if x.size != basis.dim:
        raise ConfigError(f"starting vector has length {x.size}, basis has dimension {basis.dim}")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ConfigError("starting vector is zero")
    return x / norm


def trace_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in trace.records:
        writer.writerow(record.csv_row())
    return buf.getvalue()


def summarize(config: RunConfig, problem: Problem, trace: RunTrace, seed: int | None) -> dict:
    c = trace.counters
    fidelity = fidelity_to_ground(trace.final_x, problem.ground) if trace.final_x is not None else None
    epochs = trace.epochs
    return {
        "model": problem.label,
        "d": problem.H.dim,
        "optimizer": config.optimizer,
        "init": str(config.init),
        "seed": seed,
        "e0": problem.e0,
        "ground_degeneracy": len(problem.ground),
        "status": trace.status,
        "epochs": epochs,
        "epochs_to_chem_acc": trace.epochs_to_chem_acc,
        "chem_acc": config.chem_acc,
        "chem_mode": config.chem_mode,
        "initial_loss": trace.initial_loss,
        "final_loss": trace.final_loss,
        "final_abs_error": trace.final_abs_error,
        "final_rel_error": trace.final_rel_error,
        "final_fidelity": fidelity,
        "loss_calls": c.loss_calls,
        "gradient_calls": c.gradient_calls,
        "psr_equivalent_calls": c.psr_equivalent_calls,
        "linesearch_loss_calls": c.linesearch_loss_calls,
        "avg_loss_calls_per_epoch": c.linesearch_loss_calls / epochs if epochs else 0.0,
        "restarts": trace.restarts,
    }


def execute(config: RunConfig, problem: Problem | None = None, seed: int | None = None):
    """Run one optimization without touching the filesystem; returns ``(trace, summary)``."""
    problem = build_problem(config) if problem is None else problem
    seed = config.run_seed() if seed is None else seed
    x0 = starting_point(config, problem, seed)
    trace = run_optimizer(config.optimizer, problem.H, x0, config.params(), problem.e0)
    used_seed = seed if config.init.kind == "haar" else None
    return trace, summarize(config, problem, trace, used_seed)


def write_outputs(out_dir, stem: str, trace: RunTrace, summary: dict) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    csv_path.write_text(trace_csv(trace))
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def run_gso(config: RunConfig, problem: Problem | None = None):
    """Build the Hamiltonian, solve it exactly, optimize, and write CSV/JSON if ``config.out`` is set."""
    trace, summary = execute(config, problem)
    if config.out:
        write_outputs(config.out, "trace", trace, summary)
    return trace, summary
