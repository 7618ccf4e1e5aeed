"""Exact-geodesic descent and its conjugate-gradient variant on S^{d-1}.

Each epoch moves along the great circle of the search direction ``u``,
picks the step by a strong-Wolfe search whose starting point comes from a
power-method estimate, and transports ``u`` exactly to the new point to
build the next conjugate direction with a hybrid Dai-Yuan/Hestenes-Stiefel
coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..coords import (
    jacobian_transpose_apply,
    natural_gradient_x,
    regularize_singularities,
    theta_from_x,
    x_from_theta,
)
from ..errors import LineSearchFailed, RunAborted
from ..geometry import _operator, as_state, exp_map, parallel_transport, self_transport
from ..gradients import CallCounters, grad_theta_structured, grad_x, loss
from .linesearch import LineSearchResult, golden_section, power_method_step, strong_wolfe
from .params import CGParams
from .trace import RunTrace, StepAudit, StopRules, make_record

DENOM_FLOOR = 1e-300


@dataclass
class OptimizerState:
    """Iterate of a sphere optimizer.

    ``v`` is the descent direction (negative natural gradient) at ``x`` and
    ``u`` the current search direction; both are tangent at ``x``.
    """

    x: np.ndarray
    theta: np.ndarray
    loss: float
    v: np.ndarray
    u: np.ndarray
    eta_prev: float = 0.0
    epoch: int = 0
    counters: CallCounters | None = None
    grad_theta: np.ndarray | None = None


def descent_direction(theta, x, H, route: str = "chain", counters: CallCounters | None = None,
                      count_loss: bool = False):
    """``(L, v, ∂θL)`` at a point, with ``v = -J g⁻¹ ∂θL``.

    ``route`` selects how the gradient is formed: ``"chain"`` (``Jᵀ ∂xL``),
    ``"structured"`` (loss-evaluation identity) or ``"amplitude"`` (the
    spherical gradient directly, with no chart). The first two return the
    angle gradient as well; ``"amplitude"`` returns ``None`` for it.
    The loss value is charged to ``counters`` only when ``count_loss`` is set
    and the route has not already paid for it; after a line search it is
    known from the accepted trial.
    """
    M = _operator(H)
    if route == "structured":
        g_theta = grad_theta_structured(theta, M, counters)
        return loss(x, M), natural_gradient_x(theta, g_theta), g_theta
    value = loss(x, M, counters if count_loss else None)
    if route == "chain":
        g_theta = jacobian_transpose_apply(theta, grad_x(x, M, counters))
        return value, natural_gradient_x(theta, g_theta), g_theta
    if route == "amplitude":
        return value, -grad_x(x, M, counters), None
    raise ValueError(f"unknown gradient route {route!r}")


def initial_state(H, x0, params: CGParams = CGParams(), counters: CallCounters | None = None,
                  regularize: bool | None = None) -> tuple[OptimizerState, list[int]]:
    """Chart the starting point, apply the singularity reset, and evaluate loss and direction."""
    counters = CallCounters() if counters is None else counters
    x = as_state(np.asarray(x0, dtype=float), tol=1e-10)
    x = x / np.linalg.norm(x)
    theta = theta_from_x(x)
    resets: list[int] = []
    if params.regularize if regularize is None else regularize:
        theta, resets = regularize_singularities(theta, params.tau)
        if resets:
            x = x_from_theta(theta)
    value, v, g_theta = descent_direction(theta, x, H, params.gradient_route, counters, count_loss=True)
    return OptimizerState(x, theta, value, v, v.copy(), 0.0, 0, counters, g_theta), resets


def egt_step(state: OptimizerState, H, eta: float, route: str = "chain") -> OptimizerState:
    """One plain geodesic step ``x' = exp_x(η v)``, re-charted, with ``v`` recomputed."""
    if eta < 0.0:
        raise ValueError(f"step size must be non-negative, got {eta}")
    if eta == 0.0 or not np.any(state.v):
        return replace(state, epoch=state.epoch + 1, eta_prev=eta)
    x_new = exp_map(state.x, state.v, eta)
    theta_new = theta_from_x(x_new)
    value, v, g_theta = descent_direction(theta_new, x_new, H, route, state.counters, count_loss=True)
    return OptimizerState(x_new, theta_new, value, v, v.copy(), eta, state.epoch + 1, state.counters, g_theta)


def vector_transport_scaled(state: OptimizerState, eta: float) -> tuple[np.ndarray, float]:
    """Transport ``u`` along its own geodesic and the scale ``s = min(1, ‖u‖/‖T u‖)``."""
    u = state.u
    nu = np.linalg.norm(u)
    if nu == 0.0:
        return u.copy(), 1.0
    tu = self_transport(state.x, u, eta)
    ntu = np.linalg.norm(tu)
    return tu, (1.0 if ntu == 0.0 else min(1.0, nu / ntu))


def beta_hybrid(v_new, v_old, u_old, transported_u, transported_negv, s_t: float = 1.0, l_t: float = 1.0) -> float:
    """``max(0, min(β_DY, β_HS))`` written in terms of the descent directions.

    With ``-v`` playing the gradient::

        β_DY = <-v', -v'> / (<-v', s T(u)> - <-v, u>)
        β_HS = (<-v', -v'> - <-v', l T(-v)>) / (same denominator)

    A denominator below ``1e-300`` in magnitude gives ``β = 0`` (restart).
    """
    g_new = -np.asarray(v_new, dtype=float)
    g_old = -np.asarray(v_old, dtype=float)
    denom = float(np.dot(g_new, s_t * np.asarray(transported_u))) - float(np.dot(g_old, u_old))
    if abs(denom) < DENOM_FLOOR:
        return 0.0
    gg = float(np.dot(g_new, g_new))
    beta_dy = gg / denom
    beta_hs = (gg - float(np.dot(g_new, l_t * np.asarray(transported_negv)))) / denom
    return max(0.0, min(beta_dy, beta_hs))


def slope_from_losses(x, value: float, w, M, counters: CallCounters | None) -> float:
    """``<∂L(x), w>`` from two extra loss evaluations.

    Uses ``2 xᵀHw = ‖w‖ (2 L((x + ŵ)/√2) - L(ŵ) - L(x))`` so the curvature
    test costs loss calls rather than a gradient, and ``L(x)`` is reused.
    """
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return 0.0
    w_hat = w / nw
    l_w = loss(w_hat, M, counters)
    l_mix = loss((x + w_hat) / math.sqrt(2.0), M, counters)
    return float(nw * (2.0 * l_mix - l_w - value))


class _GeodesicPath:
    """``phi`` and ``dphi`` along ``η -> exp_x(η u)`` with loss-call accounting."""

    def __init__(self, state: OptimizerState, u, M, counters: CallCounters):
        self.x = state.x
        self.u = u
        self.M = M
        self.counters = counters
        self.cache: dict[float, tuple[np.ndarray, float]] = {}

    def _calls(self, fn):
        before = self.counters.loss_calls
        out = fn()
        self.counters.linesearch_loss_calls += self.counters.loss_calls - before
        return out

    def point(self, eta: float) -> tuple[np.ndarray, float]:
        if eta not in self.cache:
            x_eta = exp_map(self.x, self.u, eta)
            self.cache[eta] = (x_eta, self._calls(lambda: loss(x_eta, self.M, self.counters)))
        return self.cache[eta]

    def phi(self, eta: float) -> float:
        return self.point(eta)[1]

    def dphi(self, eta: float) -> float:
        x_eta, value = self.point(eta)
        tu = self_transport(self.x, self.u, eta)
        tu = tu - np.dot(x_eta, tu) * x_eta
        return self._calls(lambda: slope_from_losses(x_eta, value, tu, self.M, self.counters))


def _search(path, phi0: float, slope0: float, unorm: float, params: CGParams) -> LineSearchResult:
    if params.linesearch == "golden":
        eta0 = golden_section(path.phi, 0.0, math.pi / (2.0 * unorm))
    else:
        eta0 = power_method_step(unorm, phi0, params.c3, params.molecule_mode)
    return strong_wolfe(path.phi, path.dphi, phi0, slope0, eta0, c1=params.c1, c2=params.c2,
                        max_backtracks=params.max_backtracks, arc_scale=unorm, eta_floor=params.eta_floor)


def wolfe_line_search(state: OptimizerState, H, u=None, params: CGParams = CGParams()) -> tuple[float, int]:
    """Strong-Wolfe step along the geodesic of ``u`` (default: ``state.u``).

    Returns ``(η, backtracks)``. Raises ``ValueError`` if ``u`` is not a
    descent direction and :class:`LineSearchFailed` if no admissible step is
    found.
    """
    u = state.u if u is None else np.asarray(u, dtype=float)
    counters = state.counters if state.counters is not None else CallCounters()
    slope0 = -float(np.dot(state.v, u))
    if not slope0 < 0.0:
        raise ValueError(f"u is not a descent direction (<-v, u> = {slope0!r})")
    path = _GeodesicPath(state, u, _operator(H), counters)
    res = _search(path, state.loss, slope0, float(np.linalg.norm(u)), params)
    return res.eta, res.backtracks


def _roundoff_limited(slope0: float, unorm: float, value: float, params: CGParams) -> bool:
    # the largest decrease any admissible step could certify is below loss roundoff
    reach = params.c1 * abs(slope0) * (math.pi / unorm)
    return reach <= 1e3 * np.finfo(float).eps * max(1.0, abs(value))


def egt_cg_run(H, x0, params: CGParams = CGParams(), e0: float | None = None, conjugate: bool = True,
               name: str | None = None) -> RunTrace:
    """Run exact-geodesic conjugate gradient (``conjugate=False`` gives plain EGT with line search).

    ``e0`` is the reference ground energy used for errors and the
    chemical-accuracy halt; without it only the residual, plateau, increase
    and epoch-limit rules apply.
    """
    M = _operator(H)
    counters = CallCounters()
    state, _ = initial_state(M, x0, params, counters)
    trace = RunTrace(name or ("egt-cg" if conjugate else "egt"), e0, state.loss, counters=counters,
                     chem_acc=params.chem_acc, chem_mode=params.chem_mode)
    if params.max_epochs == 0:
        trace.status = "max_epochs"
    rules = StopRules(params, e0, state.loss)
    epoch = 0
    while trace.status == "running":
        unorm = float(np.linalg.norm(state.u))
        slope0 = -float(np.dot(state.v, state.u))
        if unorm == 0.0 or slope0 * slope0 / (unorm * unorm) < params.epsilon:
            trace.status = "converged"
            break
        if slope0 >= 0.0:
            state.u = state.v.copy()
            trace.restarts += 1
            unorm = float(np.linalg.norm(state.u))
            slope0 = -float(np.dot(state.v, state.u))
        res = None
        for attempt in range(2):
            path = _GeodesicPath(state, state.u, M, counters)
            try:
                res = _search(path, state.loss, slope0, unorm, params)
                break
            except LineSearchFailed as exc:
                if _roundoff_limited(slope0, unorm, state.loss, params):
                    trace.status = "stalled"
                    break
                if attempt == 1 or np.array_equal(state.u, state.v):
                    trace.status = "aborted"
                    raise RunAborted(f"line search failed twice at epoch {epoch + 1}: {exc}", trace) from exc
                state.u = state.v.copy()
                trace.restarts += 1
                unorm = float(np.linalg.norm(state.u))
                slope0 = -float(np.dot(state.v, state.u))
        if res is None:
            break
        epoch += 1
        eta = res.eta
        if params.keep_states:
            trace.steps.append(StepAudit(state.x.copy(), state.u.copy(), eta))
        x_new = path.point(eta)[0]
        tu, s_t = vector_transport_scaled(state, eta)
        t_negv = parallel_transport(state.x, state.u, -state.v, eta)
        ntv = np.linalg.norm(t_negv)
        l_t = 1.0 if ntv == 0.0 else min(1.0, float(np.linalg.norm(state.v)) / ntv)

        theta_new = theta_from_x(x_new)
        resets: list[int] = []
        if params.regularize:
            theta_new, resets = regularize_singularities(theta_new, params.tau)
            if resets:
                x_new = x_from_theta(theta_new)
        value, v_new, g_theta = descent_direction(theta_new, x_new, M, params.gradient_route, counters,
                                                  count_loss=bool(resets))
        if conjugate and not resets:
            beta = beta_hybrid(v_new, state.v, state.u, tu, t_negv, s_t, l_t)
            u_new = v_new + beta * s_t * tu
            u_new = u_new - np.dot(x_new, u_new) * x_new
        else:
            beta = 0.0
            u_new = v_new.copy()
        state = OptimizerState(x_new, theta_new, value, v_new, u_new, eta, epoch, counters, g_theta)
        trace.records.append(make_record(epoch, value, e0, float(np.linalg.norm(v_new)), eta, beta,
                                         res.backtracks, resets, counters, s_t, l_t))
        verdict = rules.update(epoch, value)
        if verdict:
            trace.status = verdict
    trace.final_x = state.x
    return trace
