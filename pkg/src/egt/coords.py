"""Hyperspherical coordinate chart for S^{d-1}.

Angles ``theta`` have length ``M = d - 1``. The first ``M - 1`` live in
``[0, π]`` and the last in ``[0, 2π)``. With ``S_i = ∏_{m<i} sin θ_m``::

    x_i = cos θ_i · S_i    (i < M)
    x_M = S_M

The pulled-back metric is diagonal with ``g_ll = S_l²`` and the Jacobian is
tall lower Hessenberg, so products with ``J`` and ``Jᵀ`` run as row
recursions that never hold the matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, SingularMetric

TWO_PI = 2.0 * math.pi
ANGLE_SLACK = 1e-12
DEFAULT_TAU = 1e-3


def _angles(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise DimensionMismatch(f"angle vector must be 1-D with at least one entry, got shape {theta.shape}")
    return theta


def x_from_theta(theta) -> np.ndarray:
    """Amplitudes of the point with hyperspherical angles ``theta``; unit norm by construction."""
    theta = _angles(theta)
    s = np.sin(theta)
    prefix = np.concatenate(([1.0], np.cumprod(s)))
    x = prefix.copy()
    x[:-1] *= np.cos(theta)
    return x


def theta_from_x(x) -> np.ndarray:
    """Inverse chart. Angles come out canonical.

    Each ``θ_j = atan2(‖x_{j+1:}‖, x_j)``, which equals ``arccos(x_j / ‖x_{j:}‖)``
    but keeps full precision near the poles. The last angle uses the sign of
    ``x_d`` to pick the branch in ``[0, 2π)``. A zero tail (``‖x_{j:}‖ = 0``)
    maps to ``θ_j = 0``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DimensionMismatch(f"the chart needs d >= 2, got shape {x.shape}")
    tail = np.sqrt(np.cumsum((x * x)[::-1])[::-1])
    theta = np.arctan2(tail[1:], x[:-1])
    last = math.atan2(x[-1], x[-2])
    if last < 0.0:
        last += TWO_PI
    if last >= TWO_PI:
        last = 0.0
    theta[-1] = last
    return theta


def canonicalize(theta) -> np.ndarray:
    """Bring angles into the chart domain.

    Values within ``ANGLE_SLACK`` of ``[0, π]`` are clamped and the last angle
    is wrapped mod 2π. Anything further out is re-charted through the point it
    represents, which can change several angles at once.
    """
    theta = _angles(theta).copy()
    head = theta[:-1]
    if np.any(head < -ANGLE_SLACK) or np.any(head > math.pi + ANGLE_SLACK):
        return theta_from_x(x_from_theta(theta))
    np.clip(head, 0.0, math.pi, out=head)
    last = theta[-1] % TWO_PI
    theta[-1] = 0.0 if last >= TWO_PI else last
    return theta


def metric_diag(theta) -> np.ndarray:
    """Diagonal of ``g = JᵀJ``: ``g_11 = 1`` and ``g_jj = ∏_{l<j} sin² θ_l``."""
    theta = _angles(theta)
    s2 = np.sin(theta[:-1]) ** 2
    return np.concatenate(([1.0], np.cumprod(s2)))


def jacobian_apply(theta, w) -> np.ndarray:
    """``J(θ) w`` for the chart Jacobian, in O(d) memory.

    Row ``i`` has nonzeros only in columns ``l <= i``, and its entries left of
    the diagonal are those of row ``i - 1`` times ``sin θ_{i-1}``, plus one new
    entry. The running row is contracted with ``w`` as it is built, so no row
    or matrix is ever stored.
    """
    theta = _angles(theta)
    w = np.asarray(w, dtype=float)
    m = theta.size
    if w.shape != (m,):
        raise DimensionMismatch(f"expected a vector of length {m}, got shape {w.shape}")
    sin = np.sin(theta).tolist()
    cos = np.cos(theta).tolist()
    wl = w.tolist()
    out = np.empty(m + 1)
    prefix = 1.0  # S_i
    acc = 0.0  # (row_i restricted to columns < i) · w, without the cos θ_i factor
    for i in range(m):
        out[i] = cos[i] * acc - sin[i] * prefix * wl[i]
        acc = sin[i] * acc + cos[i] * prefix * wl[i]
        prefix *= sin[i]
    out[m] = acc
    return out


def jacobian_transpose_apply(theta, y) -> np.ndarray:
    """``J(θ)ᵀ y`` by the same recursion run from the last row upwards."""
    theta = _angles(theta)
    y = np.asarray(y, dtype=float)
    m = theta.size
    if y.shape != (m + 1,):
        raise DimensionMismatch(f"expected a vector of length {m + 1}, got shape {y.shape}")
    sin = np.sin(theta).tolist()
    cos = np.cos(theta).tolist()
    yl = y.tolist()
    prefix = [1.0] * m
    for i in range(1, m):
        prefix[i] = prefix[i - 1] * sin[i - 1]
    out = np.empty(m)
    tail = yl[m]  # Σ_{i>l} c_i ∏_{l<k<i} sin θ_k · y_i, with c_M = 1
    for l in range(m - 1, -1, -1):
        out[l] = prefix[l] * (cos[l] * tail - sin[l] * yl[l])
        tail = cos[l] * yl[l] + sin[l] * tail
    return out


def jacobian_matrix(theta) -> np.ndarray:
    """Dense ``d × (d-1)`` Jacobian. Quadratic memory; meant for checks and small ``d``."""
    theta = _angles(theta)
    m = theta.size
    J = np.zeros((m + 1, m))
    sin = np.sin(theta)
    cos = np.cos(theta)
    for i in range(m + 1):
        ci = cos[i] if i < m else 1.0
        for l in range(min(i + 1, m)):
            others = np.prod(np.delete(sin[:i], l)) if l < i else np.prod(sin[:i])
            J[i, l] = ci * cos[l] * others if l < i else -sin[i] * others
    return J


def natural_gradient_x(theta, grad_theta) -> np.ndarray:
    """Descent direction ``-J g⁻¹ ∂θL`` expressed in amplitude space.

    The metric is inverted element-wise; a zero entry raises
    :class:`SingularMetric` naming the first offending index.
    """
    g = metric_diag(theta)
    grad_theta = np.asarray(grad_theta, dtype=float)
    if grad_theta.shape != g.shape:
        raise DimensionMismatch(f"expected a gradient of length {g.size}, got shape {grad_theta.shape}")
    zero = np.flatnonzero(g == 0.0)
    if zero.size:
        raise SingularMetric(int(zero[0]), float(g[zero[0]]))
    return -jacobian_apply(theta, grad_theta / g)


def regularize_singularities(theta, tau: float = DEFAULT_TAU) -> tuple[np.ndarray, list[int]]:
    """Reset every non-final angle with ``|sin θ_j| <= tau`` to ``π/2``.

    Returns the new angles and the (0-based) indices that were reset. The
    last angle never enters the metric and is left alone.
    """
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    theta = _angles(theta).copy()
    hit = np.flatnonzero(np.abs(np.sin(theta[:-1])) <= tau)
    theta[hit] = math.pi / 2
    return theta, hit.tolist()
