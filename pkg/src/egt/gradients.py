"""Loss and gradient routes for the Rayleigh quotient ``L(x) = xᵀHx``.

Three routes to ``∂θL`` are provided: the chain rule through the chart
Jacobian, a structured identity that needs only ``2M + 1`` loss evaluations
for ``M`` angles, and central finite differences as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coords import jacobian_transpose_apply, metric_diag, x_from_theta
from .errors import DimensionMismatch, SingularMetric
from .geometry import _operator


@dataclass
class CallCounters:
    """Per-run tallies of loss and gradient evaluations.

    ``psr_equivalent_calls`` is what the same gradients would have cost with
    the four-term parameter-shift rule (``4M`` per full gradient).
    ``linesearch_loss_calls`` counts only loss evaluations spent choosing
    step sizes; it is a subset of ``loss_calls``.
    """

    loss_calls: int = 0
    gradient_calls: int = 0
    psr_equivalent_calls: int = 0
    linesearch_loss_calls: int = 0

    def copy(self) -> CallCounters:
        return CallCounters(self.loss_calls, self.gradient_calls, self.psr_equivalent_calls,
                            self.linesearch_loss_calls)

    def as_dict(self) -> dict:
        return {
            "loss_calls": self.loss_calls,
            "gradient_calls": self.gradient_calls,
            "psr_equivalent_calls": self.psr_equivalent_calls,
            "linesearch_loss_calls": self.linesearch_loss_calls,
        }


def _matrix(H, d: int):
    M = _operator(H)
    if M.shape != (d, d):
        raise DimensionMismatch(f"operator shape {M.shape} does not match state dimension {d}")
    return M


def loss(x, H, counters: CallCounters | None = None) -> float:
    """``xᵀHx``; one loss call."""
    x = np.asarray(x, dtype=float)
    M = _matrix(H, x.size)
    if counters is not None:
        counters.loss_calls += 1
    return float(np.dot(x, M @ x))


def grad_x(x, H, counters: CallCounters | None = None) -> np.ndarray:
    """Spherical gradient ``2(H - L)x`` in amplitude space; one gradient call."""
    x = np.asarray(x, dtype=float)
    M = _matrix(H, x.size)
    if counters is not None:
        counters.gradient_calls += 1
    hx = M @ x
    return 2.0 * (hx - np.dot(x, hx) * x)


def loss_and_grad_x(x, H, counters: CallCounters | None = None) -> tuple[float, np.ndarray]:
    """Both at the cost of one operator product, counted as one gradient call."""
    x = np.asarray(x, dtype=float)
    M = _matrix(H, x.size)
    if counters is not None:
        counters.gradient_calls += 1
    hx = M @ x
    value = float(np.dot(x, hx))
    return value, 2.0 * (hx - value * x)


def grad_theta_chain(theta, H, counters: CallCounters | None = None) -> np.ndarray:
    """``∂θL = Jᵀ ∂xL`` through the structured transpose product."""
    x = x_from_theta(theta)
    return jacobian_transpose_apply(theta, grad_x(x, H, counters))


def normalized_column(theta, index: int) -> np.ndarray:
    """Column ``index`` of the chart Jacobian divided by ``sqrt(g_ll)``.

    The column is zero above row ``index`` and, below it, matches the chart
    evaluated at the tail angles with ``θ_index`` advanced by ``π/2``. The
    prefix ``∏_{m<index} sin θ_m`` cancels against ``sqrt(g)`` up to its sign,
    which is kept so the identity also holds outside the canonical domain.
    """
    theta = np.asarray(theta, dtype=float)
    m = theta.size
    col = np.zeros(m + 1)
    tail = theta[index:].copy()
    tail[0] += math.pi / 2
    col[index:] = x_from_theta(tail)
    prefix = float(np.prod(np.sin(theta[:index])))
    if prefix < 0.0:
        col = -col
    return col


def grad_theta_structured(theta, H, counters: CallCounters | None = None) -> np.ndarray:
    """Gradient from ``2M + 1`` loss evaluations.

    For each angle, with ``φ_l`` the normalized Jacobian column and
    ``ψ = x(θ)``, ``∂_l L = sqrt(g_ll) (2 L(φ⁺_l) - L(φ_l) - L(ψ))`` where
    ``φ⁺_l = (ψ + φ_l)/√2``. ``L(ψ)`` is evaluated once. Exact on amplitudes;
    raises :class:`SingularMetric` if some ``g_ll`` vanishes.
    """
    theta = np.asarray(theta, dtype=float)
    m = theta.size
    g = metric_diag(theta)
    zero = np.flatnonzero(g == 0.0)
    if zero.size:
        raise SingularMetric(int(zero[0]), float(g[zero[0]]))
    psi = x_from_theta(theta)
    M = _matrix(H, psi.size)
    local = CallCounters()
    l_psi = loss(psi, M, local)
    root_g = np.sqrt(g)
    out = np.empty(m)
    for l in range(m):
        col = normalized_column(theta, l)
        l_col = loss(col, M, local)
        l_mix = loss((psi + col) / math.sqrt(2.0), M, local)
        out[l] = root_g[l] * (2.0 * l_mix - l_col - l_psi)
    if counters is not None:
        counters.loss_calls += local.loss_calls
        counters.gradient_calls += 1
        counters.psr_equivalent_calls += 4 * m
    return out


def structured_cost(num_params: int) -> int:
    """Loss calls for one structured gradient: ``2M + 1``."""
    return 2 * num_params + 1


def psr_ratio(num_params: int) -> float:
    """Cost of the structured gradient relative to the parameter-shift rule.

    The varphi states live on shorter circuits, so a hardware estimate counts
    ``3(M + 1)/2`` loss-equivalents against ``4M`` for parameter shift, a
    ratio that tends to ``3/8``.
    """
    if num_params < 1:
        raise ValueError("need at least one parameter")
    return 3.0 * (num_params + 1) / (8.0 * num_params)


def fd_gradient_oracle(theta, H, step: float = 1e-6) -> np.ndarray:
    """Central differences of ``L ∘ x_from_theta``."""
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    theta = np.asarray(theta, dtype=float)
    M = _operator(H)
    out = np.empty(theta.size)
    for l in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[l] += step
        dn[l] -= step
        out[l] = (loss(x_from_theta(up), M) - loss(x_from_theta(dn), M)) / (2.0 * step)
    return out
