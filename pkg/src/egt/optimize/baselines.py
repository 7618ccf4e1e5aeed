"""Reference optimizers: quantum natural gradient (first and second order),
conjugate gradient with flat angle-space gradients, and Adam."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ..coords import (
    jacobian_apply,
    metric_diag,
    regularize_singularities,
    theta_from_x,
    x_from_theta,
)
from ..errors import LineSearchFailed, RunAborted, SingularMetric
from ..geometry import _operator, as_state, riemannian_grad
from ..gradients import CallCounters, grad_theta_chain, loss
from .egt_cg import (
    OptimizerState,
    _roundoff_limited,
    beta_hybrid,
    descent_direction,
    initial_state,
    slope_from_losses,
)
from .linesearch import power_method_step, strong_wolfe
from .params import CGParams
from .trace import RunTrace, StopRules, make_record

ADAM_GRID = (0.001, 0.005, 0.01, 0.05, 0.1, 0.5)
QNG_GRID = tuple(np.logspace(-4.0, math.log10(2.0), 32).tolist())


# --- quantum natural gradient ------------------------------------------------

def qng_step(state: OptimizerState, H, eta: float, order: int = 1, route: str = "chain") -> OptimizerState:
    """Truncated natural-gradient step.

    Order 1 updates the angles, ``θ' = θ - η g⁻¹ ∂θL``. Order 2 keeps the
    second-order Taylor expansion of the geodesic,
    ``x̃ = (1 - η²‖v‖²/2) x + η v``, and renormalizes.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if eta < 0.0:
        raise ValueError(f"step size must be non-negative, got {eta}")
    if eta == 0.0:
        return replace(state, epoch=state.epoch + 1, eta_prev=0.0)
    theta_new = _qng_theta(state, eta, order)
    x_new = x_from_theta(theta_new)
    value, v, g_theta = descent_direction(theta_new, x_new, H, route, state.counters, count_loss=True)
    return OptimizerState(x_new, theta_new, value, v, v.copy(), eta, state.epoch + 1, state.counters, g_theta)


def _qng_theta(state: OptimizerState, eta: float, order: int) -> np.ndarray:
    if order == 1:
        g = metric_diag(state.theta)
        zero = np.flatnonzero(g == 0.0)
        if zero.size:
            raise SingularMetric(int(zero[0]), float(g[zero[0]]))
        if state.grad_theta is None:
            raise ValueError("first-order QNG needs the angle gradient; use the chain or structured route")
        return state.theta - eta * state.grad_theta / g
    nv2 = float(np.dot(state.v, state.v))
    x_t = (1.0 - 0.5 * eta * eta * nv2) * state.x + eta * state.v
    return theta_from_x(x_t / np.linalg.norm(x_t))


def qng_run(H, x0, params: CGParams = CGParams(), order: int = 1, e0: float | None = None,
            eta_grid=QNG_GRID) -> RunTrace:
    """QNG with a greedy per-epoch step chosen from a fixed logarithmic grid.

    Every grid value costs one loss call (counted as line-search calls); the
    step with the lowest loss is taken even if it does not decrease the loss.
    """
    if params.gradient_route == "amplitude" and order == 1:
        params = params.with_overrides(gradient_route="chain")
    M = _operator(H)
    counters = CallCounters()
    state, _ = initial_state(M, x0, params, counters)
    trace = RunTrace(f"qng{order}", e0, state.loss, counters=counters,
                     chem_acc=params.chem_acc, chem_mode=params.chem_mode)
    rules = StopRules(params, e0, state.loss)
    grid = np.asarray(eta_grid, dtype=float)
    if params.max_epochs == 0:
        trace.status = "max_epochs"
    epoch = 0
    while trace.status == "running":
        nv = float(np.linalg.norm(state.v))
        if nv * nv < params.epsilon:
            trace.status = "converged"
            break
        epoch += 1
        best = None
        for eta in grid:
            theta_try = _qng_theta(state, float(eta), order)
            counters.linesearch_loss_calls += 1
            value = loss(x_from_theta(theta_try), M, counters)
            if best is None or value < best[1]:
                best = (float(eta), value, theta_try)
        eta, value, theta_new = best
        resets: list[int] = []
        if params.regularize:
            theta_new, resets = regularize_singularities(theta_new, params.tau)
        theta_new = _canonical(theta_new)
        x_new = x_from_theta(theta_new)
        value, v, g_theta = descent_direction(theta_new, x_new, M, params.gradient_route, counters,
                                              count_loss=bool(resets))
        state = OptimizerState(x_new, theta_new, value, v, v.copy(), eta, epoch, counters, g_theta)
        trace.records.append(make_record(epoch, value, e0, float(np.linalg.norm(v)), eta, 0.0, 0,
                                         resets, counters))
        verdict = rules.update(epoch, value)
        if verdict:
            trace.status = verdict
    trace.final_x = state.x
    return trace


def _canonical(theta: np.ndarray) -> np.ndarray:
    # first-order QNG moves angles freely; re-chart so the metric is evaluated in-domain
    return theta_from_x(x_from_theta(theta))


# --- flat-space conjugate gradient -------------------------------------------

class _LinePath:
    """``phi`` and ``dphi`` along ``η -> θ + η d`` in angle space."""

    def __init__(self, theta, direction, M, counters: CallCounters):
        self.theta = theta
        self.d = direction
        self.M = M
        self.counters = counters
        self.cache: dict[float, tuple[np.ndarray, np.ndarray, float]] = {}

    def point(self, eta: float):
        if eta not in self.cache:
            th = self.theta + eta * self.d
            x = x_from_theta(th)
            self.counters.linesearch_loss_calls += 1
            self.cache[eta] = (th, x, loss(x, self.M, self.counters))
        return self.cache[eta]

    def phi(self, eta: float) -> float:
        return self.point(eta)[2]

    def dphi(self, eta: float) -> float:
        th, x, value = self.point(eta)
        # ∂θL · d = <∂xL, J d>, and J d is tangent at x
        w = jacobian_apply(th, self.d)
        before = self.counters.loss_calls
        out = slope_from_losses(x, value, w, self.M, self.counters)
        self.counters.linesearch_loss_calls += self.counters.loss_calls - before
        return out


def flat_cg_run(H, x0, params: CGParams = CGParams(), e0: float | None = None) -> RunTrace:
    """Hybrid DY/HS conjugate gradient on the angles with the Euclidean inner product.

    No transport and no singularity reset: the angles move on a straight
    line and the same strong-Wolfe search and stopping rules are applied.
    """
    M = _operator(H)
    counters = CallCounters()
    x = as_state(np.asarray(x0, dtype=float), tol=1e-10)
    theta = theta_from_x(x / np.linalg.norm(x))
    x = x_from_theta(theta)
    value = loss(x, M, counters)
    g = grad_theta_chain(theta, M, counters)
    d = -g
    trace = RunTrace("flat-cg", e0, value, counters=counters, chem_acc=params.chem_acc,
                     chem_mode=params.chem_mode)
    rules = StopRules(params, e0, value)
    if params.max_epochs == 0:
        trace.status = "max_epochs"
    epoch = 0
    while trace.status == "running":
        dnorm = float(np.linalg.norm(d))
        slope0 = float(np.dot(g, d))
        if dnorm == 0.0 or slope0 * slope0 / (dnorm * dnorm) < params.epsilon:
            trace.status = "converged"
            break
        if slope0 >= 0.0:
            d = -g
            trace.restarts += 1
            dnorm, slope0 = float(np.linalg.norm(d)), float(np.dot(g, d))
        res = None
        for attempt in range(2):
            path = _LinePath(theta, d, M, counters)
            eta0 = power_method_step(dnorm, value, params.c3, params.molecule_mode)
            try:
                res = strong_wolfe(path.phi, path.dphi, value, slope0, eta0, c1=params.c1, c2=params.c2,
                                   max_backtracks=params.max_backtracks, arc_scale=dnorm,
                                   eta_floor=params.eta_floor)
                break
            except LineSearchFailed as exc:
                if _roundoff_limited(slope0, dnorm, value, params):
                    trace.status = "stalled"
                    break
                if attempt == 1 or np.array_equal(d, -g):
                    trace.status = "aborted"
                    raise RunAborted(f"line search failed twice at epoch {epoch + 1}: {exc}", trace) from exc
                d = -g
                trace.restarts += 1
                dnorm, slope0 = float(np.linalg.norm(d)), float(np.dot(g, d))
        if res is None:
            break
        epoch += 1
        theta_new, x_new, value = path.point(res.eta)
        g_new = grad_theta_chain(theta_new, M, counters)
        # identity transport: T(d) = d, T(-v) = -v
        beta = beta_hybrid(-g_new, -g, d, d, g)
        d = -g_new + beta * d
        theta, x, g = theta_new, x_new, g_new
        grad_norm = float(np.linalg.norm(riemannian_grad(x, M, check=False)))
        trace.records.append(make_record(epoch, value, e0, grad_norm, res.eta, beta, res.backtracks, [], counters))
        verdict = rules.update(epoch, value)
        if verdict:
            trace.status = verdict
    trace.final_x = x
    return trace


# --- Adam -----------------------------------------------------------------------

def adam_single(H, x0, params: CGParams = CGParams(), lr: float = 0.01, e0: float | None = None,
                beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> RunTrace:
    """Adam with a constant learning rate on the angle vector."""
    M = _operator(H)
    counters = CallCounters()
    x = as_state(np.asarray(x0, dtype=float), tol=1e-10)
    theta = theta_from_x(x / np.linalg.norm(x))
    x = x_from_theta(theta)
    value = loss(x, M, counters)
    trace = RunTrace("adam", e0, value, counters=counters, chem_acc=params.chem_acc,
                     chem_mode=params.chem_mode)
    rules = StopRules(params, e0, value)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    if params.max_epochs == 0:
        trace.status = "max_epochs"
    epoch = 0
    while trace.status == "running":
        g = grad_theta_chain(theta, M, counters)
        if float(np.dot(g, g)) < params.epsilon:
            trace.status = "converged"
            break
        epoch += 1
        m1 = beta1 * m1 + (1.0 - beta1) * g
        m2 = beta2 * m2 + (1.0 - beta2) * g * g
        m1_hat = m1 / (1.0 - beta1**epoch)
        m2_hat = m2 / (1.0 - beta2**epoch)
        step = lr * m1_hat / (np.sqrt(m2_hat) + eps)
        theta = theta - step
        x = x_from_theta(theta)
        value = loss(x, M, counters)
        grad_norm = float(np.linalg.norm(riemannian_grad(x, M, check=False)))
        trace.records.append(make_record(epoch, value, e0, grad_norm, lr, 0.0, 0, [], counters))
        verdict = rules.update(epoch, value)
        if verdict:
            trace.status = verdict
    trace.final_x = x
    return trace


def _adam_rank(trace: RunTrace):
    reached = trace.epochs_to_chem_acc
    err = trace.final_abs_error if trace.e0 is not None else trace.final_loss
    return (math.inf if reached is None else reached, err)


def adam_run(H, x0, params: CGParams = CGParams(), eta_grid=ADAM_GRID, e0: float | None = None) -> RunTrace:
    """Adam for every learning rate in ``eta_grid``; returns the best member.

    Best means fewest epochs to chemical accuracy, ties broken by the lower
    final error. The chosen rate is stored in each record's ``eta``.
    """
    if not len(eta_grid):
        raise ValueError("eta_grid must not be empty")
    traces = [adam_single(H, x0, params, lr, e0) for lr in eta_grid]
    return min(traces, key=_adam_rank)
