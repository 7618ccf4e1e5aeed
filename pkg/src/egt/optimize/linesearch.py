"""Strong-Wolfe step selection along a one-dimensional path.

The search only sees ``phi(η)`` (loss along the path) and ``dphi(η)``
(its derivative, compared against the slope at ``η = 0``). The same code
serves geodesic steps on the sphere, where ``dphi`` pairs the new gradient
with the transported direction, and straight lines in angle space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from ..errors import LineSearchFailed

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class LineSearchResult:
    eta: float
    backtracks: int
    value: float
    slope: float
    trials: int


def power_method_step(u_norm: float, loss_value: float, c3: float = 1.0, molecule_mode: bool = False) -> float:
    """Starting step ``c3/‖u‖ · arccos[(1 + (‖u‖/2|L|)²)^{-1/2}]``.

    The arccos form equals ``arctan(‖u‖/2|L|)``, which is what is evaluated.
    Falls back to ``1/‖u‖`` when ``|L| < 1e-12``. ``molecule_mode`` raises the
    start to at least ``π/(4‖u‖)``.
    """
    if not u_norm > 0.0:
        raise ValueError("power-method step needs a nonzero direction")
    if abs(loss_value) < 1e-12:
        eta = 1.0 / u_norm
    else:
        eta = c3 * math.atan(u_norm / (2.0 * abs(loss_value))) / u_norm
    if molecule_mode:
        eta = max(eta, math.pi / (4.0 * u_norm))
    return eta


def golden_section(phi: Callable[[float], float], lo: float, hi: float, rel_tol: float = 1e-3) -> float:
    """Minimizer of a unimodal ``phi`` on ``[lo, hi]`` by golden-section search."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > rel_tol * (hi - lo):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(d)
    return 0.5 * (a + b)


def strong_wolfe(phi: Callable[[float], float], dphi: Callable[[float], float], phi0: float, slope0: float,
                 eta0: float, *, c1: float, c2: float, max_backtracks: int, arc_scale: float = 1.0,
                 eta_floor: float = 1e-12) -> LineSearchResult:
    """Find ``η`` with ``phi(η) - phi0 <= c1 η slope0`` and ``|dphi(η)| <= c2 |slope0|``.

    Starts at ``eta0``. A sufficient-decrease failure halves the step (or
    bisects once an admissible lower end is known). When decrease holds but
    the curvature test fails with the path still descending, the step is
    doubled until the minimizer is bracketed, then bisected. The search
    fails after ``max_backtracks`` adjustments or when ``η · arc_scale``
    drops below ``eta_floor``.
    """
    if not slope0 < 0.0:
        raise ValueError(f"search direction is not a descent direction (slope {slope0!r})")
    lo, hi = 0.0, math.inf
    eta = eta0
    best = None
    for trial in range(max_backtracks + 1):
        if eta * arc_scale < eta_floor:
            break
        value = phi(eta)
        if not math.isfinite(value) or value - phi0 > c1 * eta * slope0:
            hi = eta
        else:
            if best is None or value < best[1]:
                best = (eta, value)
            slope = dphi(eta)
            if abs(slope) <= c2 * abs(slope0):
                return LineSearchResult(eta, trial, value, slope, trial + 1)
            if slope < 0.0:
                lo = eta
            else:
                hi = eta
        eta = 0.5 * (lo + hi) if math.isfinite(hi) and lo > 0.0 else (0.5 * hi if math.isfinite(hi) else 2.0 * lo)
    raise LineSearchFailed(
        f"no step satisfying both Wolfe conditions after {max_backtracks} adjustments "
        f"(last trial η = {eta:.3e})",
        best_eta=None if best is None else best[0],
        trials=max_backtracks + 1,
    )
