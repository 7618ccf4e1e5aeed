"""Grids of runs over sizes, seeds or optimizers, with aggregate statistics."""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import RunAborted
from .config import RunConfig
from .runner import build_problem, execute, trace_csv

AXES = ("sizes", "seeds", "optimizers")
CELL_COLUMNS = (
    "axis", "value", "optimizer", "n", "runs", "failed", "reached", "mean_epochs_to_chem_acc",
    "median_epochs_to_chem_acc", "ci95_low", "ci95_high", "mean_final_abs_error", "mean_final_rel_error",
    "mean_loss_calls_per_epoch",
)


def _cell_configs(template: RunConfig, axis: str, values) -> list[tuple[object, RunConfig, list[int]]]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one axis value")
    cells = []
    for value in values:
        if axis == "sizes":
            cfg = template.with_values(n=int(value))
            seeds = cfg.seed_list()
        elif axis == "optimizers":
            cfg = template.with_values(optimizer=str(value))
            seeds = cfg.seed_list()
        else:
            cfg = template
            seeds = [int(value)]
        cells.append((value, cfg, seeds))
    return cells


def _run_one(job):
    cfg, seed = job
    try:
        trace, summary = execute(cfg, seed=seed)
        return {"ok": True, "summary": summary, "csv": trace_csv(trace)}
    except RunAborted as exc:
        return {"ok": False, "error": str(exc), "seed": seed}


def mean_ci(values: list[float]) -> tuple[float, float, float]:
    """Mean and normal-approximation 95% interval ``mean ± 1.96 SE``."""
    if not values:
        return math.nan, math.nan, math.nan
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, mean, mean
    se = statistics.stdev(values) / math.sqrt(len(values))
    return mean, mean - 1.96 * se, mean + 1.96 * se


def aggregate(axis: str, value, cfg: RunConfig, results: list[dict]) -> dict:
    ok = [r["summary"] for r in results if r["ok"]]
    reached = [s["epochs_to_chem_acc"] for s in ok if s["epochs_to_chem_acc"] is not None]
    mean, lo, hi = mean_ci([float(e) for e in reached])
    return {
        "axis": axis,
        "value": value,
        "optimizer": cfg.optimizer,
        "n": cfg.n,
        "runs": len(results),
        "failed": len(results) - len(ok),
        "reached": len(reached),
        "mean_epochs_to_chem_acc": mean,
        "median_epochs_to_chem_acc": statistics.median(reached) if reached else math.nan,
        "ci95_low": lo,
        "ci95_high": hi,
        "mean_final_abs_error": statistics.fmean(s["final_abs_error"] for s in ok) if ok else math.nan,
        "mean_final_rel_error": statistics.fmean(s["final_rel_error"] for s in ok) if ok else math.nan,
        "mean_loss_calls_per_epoch": statistics.fmean(s["avg_loss_calls_per_epoch"] for s in ok) if ok else math.nan,
    }


def sweep(template: RunConfig, axis: str, values, threads: int | None = None, out: str | None = None) -> dict:
    """Run every (cell, seed) pair and aggregate per cell.

    Runs are independent, so ``threads > 1`` farms them out to worker
    processes; results are collected in submission order, which makes the
    output identical to a serial sweep. Aborted runs are counted as failed
    and do not stop the sweep.
    """
    threads = template.threads if threads is None else threads
    out = template.out if out is None else out
    cells = _cell_configs(template, axis, values)
    # build each distinct problem once up front so config errors surface before any run
    for _, cfg, _ in cells:
        build_problem(cfg)
    jobs = [(cfg, seed) for _, cfg, seeds in cells for seed in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    rows = []
    cursor = 0
    for value, cfg, seeds in cells:
        chunk = results[cursor:cursor + len(seeds)]
        cursor += len(seeds)
        rows.append(aggregate(axis, value, cfg, chunk))
        if out:
            run_dir = Path(out) / "runs"
            run_dir.mkdir(parents=True, exist_ok=True)
            for seed, res in zip(seeds, chunk):
                stem = f"{cfg.optimizer}_n{cfg.n}_seed{seed}"
                if res["ok"]:
                    (run_dir / f"{stem}.csv").write_text(res["csv"])
                    (run_dir / f"{stem}.json").write_text(json.dumps(res["summary"], indent=2, sort_keys=True) + "\n")
    report = {"axis": axis, "template": template.as_dict(), "cells": rows,
              "runs": [r.get("summary", {"failed": True, "error": r.get("error")}) for r in results]}
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CELL_COLUMNS)
            for row in rows:
                writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in CELL_COLUMNS])
        (Path(out) / "sweep.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
    return report


__all__ = ["AXES", "CELL_COLUMNS", "aggregate", "mean_ci", "sweep"]
