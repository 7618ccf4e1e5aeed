"""Per-epoch run records, stopping-rule bookkeeping, and the Wolfe re-audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import exp_map, parallel_transport, riemannian_grad
from ..gradients import CallCounters, loss
from .params import CGParams

CSV_COLUMNS = (
    "epoch", "loss", "abs_error", "rel_error", "grad_norm", "eta", "beta",
    "backtracks", "resets", "loss_calls_cum", "grad_calls_cum",
)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    abs_error: float
    rel_error: float
    grad_norm: float
    eta: float
    beta: float
    backtracks: int
    resets: list[int]
    loss_calls: int
    gradient_calls: int
    linesearch_loss_calls: int = 0
    s_t: float = 1.0
    l_t: float = 1.0

    def csv_row(self) -> list[str]:
        return [
            str(self.epoch), repr(self.loss), repr(self.abs_error), repr(self.rel_error),
            repr(self.grad_norm), repr(self.eta), repr(self.beta), str(self.backtracks),
            ";".join(str(i) for i in self.resets), str(self.loss_calls), str(self.gradient_calls),
        ]


@dataclass
class StepAudit:
    """Inputs needed to re-check one accepted step: base point, direction, step."""

    x: np.ndarray
    u: np.ndarray
    eta: float


@dataclass
class RunTrace:
    """Everything a run produced.

    ``records`` has one entry per completed epoch, numbered from 1; the
    starting point is described by ``initial_loss``. ``status`` says which
    rule ended the run.
    """

    optimizer: str
    e0: float | None
    initial_loss: float
    records: list[EpochRecord] = field(default_factory=list)
    status: str = "running"
    final_x: np.ndarray | None = None
    counters: CallCounters = field(default_factory=CallCounters)
    steps: list[StepAudit] = field(default_factory=list)
    restarts: int = 0
    chem_acc: float = 1.6e-3
    chem_mode: str = "abs"

    @property
    def epochs(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([self.initial_loss] + [r.loss for r in self.records])

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss if self.records else self.initial_loss

    def error_of(self, value: float) -> tuple[float, float]:
        return _errors(value, self.e0)

    @property
    def final_abs_error(self) -> float:
        return self.error_of(self.final_loss)[0]

    @property
    def final_rel_error(self) -> float:
        return self.error_of(self.final_loss)[1]

    @property
    def epochs_to_chem_acc(self) -> int | None:
        """First epoch whose error meets the threshold (0 if the start already does)."""
        if self.e0 is None:
            return None
        if _within(self.error_of(self.initial_loss), self.chem_acc, self.chem_mode):
            return 0
        for r in self.records:
            if _within((r.abs_error, r.rel_error), self.chem_acc, self.chem_mode):
                return r.epoch
        return None

    @property
    def avg_linesearch_calls(self) -> float:
        if not self.records:
            return 0.0
        return self.counters.linesearch_loss_calls / len(self.records)


def _errors(value: float, e0: float | None) -> tuple[float, float]:
    if e0 is None:
        return math.nan, math.nan
    err = abs(value - e0)
    return err, err / abs(e0) if e0 != 0.0 else err


def _within(errs: tuple[float, float], threshold: float, mode: str) -> bool:
    value = errs[0] if mode == "abs" else errs[1]
    return value <= threshold


class StopRules:
    """Stateful check of the epoch-level stopping rules."""

    def __init__(self, params: CGParams, e0: float | None, initial_loss: float):
        self.params = params
        self.e0 = e0
        self.prev = initial_loss
        self.small = 0
        self.rising = 0
        self.chem_epoch = 0 if self._chem(initial_loss) else None

    def _chem(self, value: float) -> bool:
        if self.e0 is None:
            return False
        return _within(_errors(value, self.e0), self.params.chem_acc, self.params.chem_mode)

    def update(self, epoch: int, value: float) -> str | None:
        p = self.params
        change = value - self.prev
        self.prev = value
        self.small = self.small + 1 if abs(change) < p.plateau_tol else 0
        self.rising = self.rising + 1 if change > 0.0 else 0
        if self.chem_epoch is None and self._chem(value):
            self.chem_epoch = epoch
        if self.chem_epoch is not None and p.halt_after_chem is not None:
            if epoch - self.chem_epoch >= p.halt_after_chem:
                return "chem_acc"
        if self.small >= p.plateau_epochs:
            return "plateau"
        if self.rising >= p.increase_epochs:
            return "increasing"
        if epoch >= p.max_epochs:
            return "max_epochs"
        return None


def make_record(epoch, value, e0, grad_norm, eta, beta, backtracks, resets, counters, s_t=1.0, l_t=1.0):
    abs_err, rel_err = _errors(value, e0)
    return EpochRecord(
        epoch=epoch, loss=value, abs_error=abs_err, rel_error=rel_err, grad_norm=grad_norm,
        eta=eta, beta=beta, backtracks=backtracks, resets=list(resets),
        loss_calls=counters.loss_calls, gradient_calls=counters.gradient_calls,
        linesearch_loss_calls=counters.linesearch_loss_calls, s_t=s_t, l_t=l_t,
    )


def wolfe_audit(trace: RunTrace, H, c1: float = 0.485, c2: float = 0.999) -> list[dict]:
    """Re-evaluate both Wolfe inequalities for every recorded step.

    Needs a trace run with ``keep_states=True``. Returns one dict per step
    with both margins (non-negative means satisfied) and the loss change.
    """
    out = []
    for i, step in enumerate(trace.steps):
        x, u, eta = step.x, step.u, step.eta
        neg_v = riemannian_grad(x, H, check=False)
        slope = float(np.dot(neg_v, u))
        l0 = loss(x, H)
        x_new = exp_map(x, u, eta)
        l1 = loss(x_new, H)
        tu = parallel_transport(x, u, u, eta)
        new_slope = float(np.dot(riemannian_grad(x_new, H, check=False), tu))
        out.append({
            "step": i + 1,
            "slope": slope,
            "decrease": l1 - l0,
            "armijo_margin": c1 * eta * slope - (l1 - l0),
            "curvature_margin": c2 * abs(slope) - abs(new_slope),
        })
    return out
