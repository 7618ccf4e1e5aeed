"""Validators for closed-form results on the sphere.

* exact variances of the loss and of the Riemannian gradient over the
  uniform measure, with a Monte Carlo estimator that reports standard errors;
* the low-order moments of the uniform distribution on S^{d-1};
* the identity between the exponential map and the flow generated by the
  commutator ``W = 2[H, x xᵀ]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import _operator, check_symmetric

QITE_MAX_DIM = 64


def _dense(H) -> np.ndarray:
    M = _operator(H)
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)
    check_symmetric(M)
    return M


@dataclass
class VarianceReport:
    """Closed-form and sampled variances of ``L(x)`` and of each ``v_j(x)``."""

    closed_form_varL: float
    closed_form_varV: np.ndarray
    mc_varL: float
    mc_varL_se: float
    mc_varV: np.ndarray
    mc_varV_se: np.ndarray
    samples: int

    def z_scores(self) -> tuple[float, np.ndarray]:
        """Deviations in units of standard error (0 where both the gap and the SE vanish)."""
        return (_z(self.mc_varL - self.closed_form_varL, self.mc_varL_se),
                np.array([_z(a - b, s) for a, b, s in zip(self.mc_varV, self.closed_form_varV, self.mc_varV_se)]))

    def within(self, n_se: float = 3.0) -> bool:
        zl, zv = self.z_scores()
        return abs(zl) <= n_se and bool(np.all(np.abs(zv) <= n_se))


def _z(gap: float, se: float) -> float:
    if se > 0.0:
        return gap / se
    return 0.0 if gap == 0.0 else math.inf


def closed_form_variances(H) -> tuple[float, np.ndarray]:
    """Exact ``Var[L]`` and ``Var[v_j]`` for ``x`` uniform on the sphere.

    ``Var[L] = (d tr H² - (tr H)²) / (d²(d+2)/2)`` and, with ``h_j`` the
    ``j``-th row of ``H``,
    ``Var[v_j] = (d(d+2)‖h_j‖² - 2(d+2) H_jj tr H + (tr H)² + 2 tr H²) / (d(d+2)(d+4)/4)``.
    Tiny negative values from cancellation are clipped to zero.
    """
    M = _dense(H)
    d = M.shape[0]
    tr = float(np.trace(M))
    tr2 = float(np.sum(M * M))
    rows = np.sum(M * M, axis=1)
    diag = np.diag(M)
    var_l = (d * tr2 - tr * tr) / (d * d * (d + 2) / 2.0)
    var_v = (d * (d + 2) * rows - 2 * (d + 2) * diag * tr + tr * tr + 2 * tr2) / (d * (d + 2) * (d + 4) / 4.0)
    return max(0.0, var_l), np.maximum(var_v, 0.0)


def sample_uniform_sphere(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on S^{d-1}: normalized standard normal vectors."""
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


class _Moments:
    """Running raw power sums of a shifted quantity, for variance and its standard error."""

    def __init__(self, shape, shift):
        self.shift = shift
        self.n = 0
        self.s = [np.zeros(shape) for _ in range(4)]

    def add(self, y):
        z = y - self.shift
        self.n += z.shape[0]
        p = np.ones_like(z)
        for k in range(4):
            p = p * z
            self.s[k] += p.sum(axis=0)

    def variance_and_se(self):
        n = self.n
        m1, m2, m3, m4 = (s / n for s in self.s)
        var = m2 - m1 * m1
        c4 = m4 - 4 * m3 * m1 + 6 * m2 * m1 * m1 - 3 * m1**4
        var = np.maximum(var, 0.0)
        se = np.sqrt(np.maximum(c4 - var * var, 0.0) / n)
        return var * n / max(n - 1, 1), se


def mc_variances(H, samples: int, rng: np.random.Generator, chunk: int = 100_000) -> VarianceReport:
    """Sample ``Var[L]`` and ``Var[v_j]`` over uniform ``x``.

    ``H`` is split as ``c I + H₀`` with ``c = tr H / d``; the loss is
    ``c + xᵀH₀x`` and the gradient only sees ``H₀``. This is exact
    algebra and keeps cancellation out of the estimates, so ``H ∝ I`` gives
    zero variance. Standard errors use the fourth central moment,
    ``SE = sqrt((m4 - s⁴)/N)``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    M = _dense(H)
    d = M.shape[0]
    c = float(np.trace(M)) / d
    H0 = M - c * np.eye(d)
    loss_m = _Moments((), 0.0)
    grad_m = _Moments((d,), np.zeros(d))
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = sample_uniform_sphere(d, rng, m)
        hx = x @ H0
        q = np.einsum("ij,ij->i", x, hx)
        loss_m.add(q)
        grad_m.add(2.0 * (hx - q[:, None] * x))
        done += m
    var_l, se_l = loss_m.variance_and_se()
    var_v, se_v = grad_m.variance_and_se()
    cf_l, cf_v = closed_form_variances(M)
    return VarianceReport(cf_l, cf_v, float(var_l), float(se_l), var_v, se_v, samples)


def sphere_moment_formulas(d: int) -> dict[str, float]:
    """Exact moments of the uniform distribution on S^{d-1} (distinct indices i, j, k)."""
    q4 = d * (d + 2)
    q6 = d * (d + 2) * (d + 4)
    return {
        "x_i": 0.0,
        "x_i^3": 0.0,
        "x_i x_j x_k": 0.0,
        "x_i x_j": 0.0,
        "x_i^2": 1.0 / d,
        "x_i^4": 3.0 / q4,
        "x_i^2 x_j^2": 1.0 / q4,
        "x_i^6": 15.0 / q6,
        "x_i^4 x_j^2": 3.0 / q6,
        "x_i^2 x_j^2 x_k^2": 1.0 / q6,
    }


def _moment_statistics(x: np.ndarray) -> dict[str, np.ndarray]:
    # per-sample averages over all index tuples of each pattern
    d = x.shape[1]
    s1 = x.sum(axis=1)
    p2 = (x**2).sum(axis=1)
    p3 = (x**3).sum(axis=1)
    p4 = (x**4).sum(axis=1)
    p6 = (x**6).sum(axis=1)
    out = {
        "x_i": s1 / d,
        "x_i^3": p3 / d,
        "x_i^2": p2 / d,
        "x_i^4": p4 / d,
        "x_i^6": p6 / d,
    }
    if d >= 2:
        pairs = d * (d - 1)
        out["x_i x_j"] = (s1**2 - p2) / pairs
        out["x_i^2 x_j^2"] = (p2**2 - p4) / pairs
        out["x_i^4 x_j^2"] = (p4 * p2 - p6) / pairs
    if d >= 3:
        triples = d * (d - 1) * (d - 2)
        # power-sum identities for sums over ordered triples of distinct indices
        out["x_i x_j x_k"] = (s1**3 - 3 * s1 * p2 + 2 * p3) / triples
        out["x_i^2 x_j^2 x_k^2"] = (p2**3 - 3 * p2 * p4 + 2 * p6) / triples
    return out


def moment_checks(d: int, samples: int, rng: np.random.Generator, chunk: int = 200_000) -> dict[str, dict]:
    """Monte Carlo estimates of the sphere moments with standard errors.

    Each pattern is averaged over all index tuples within a sample before
    averaging over samples, so one estimate (and one SE) covers the whole
    family of equivalent moments.
    """
    sums: dict[str, list[float]] = {}
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        stats = _moment_statistics(sample_uniform_sphere(d, rng, m))
        for key, val in stats.items():
            acc = sums.setdefault(key, [0.0, 0.0])
            acc[0] += float(val.sum())
            acc[1] += float((val * val).sum())
        done += m
    exact = sphere_moment_formulas(d)
    report = {}
    for key, (s, ss) in sums.items():
        mean = s / samples
        var = max(ss / samples - mean * mean, 0.0)
        se = math.sqrt(var / samples)
        report[key] = {"estimate": mean, "se": se, "exact": exact[key], "z": _z(mean - exact[key], se)}
    return report


def commutator_generator(x, H) -> np.ndarray:
    """``W = 2(H x xᵀ - x xᵀ H)``."""
    M = _dense(H)
    x = np.asarray(x, dtype=float)
    hx = M @ x
    return 2.0 * (np.outer(hx, x) - np.outer(x, hx))


def qite_equivalence_check(x, H, eta: float) -> float:
    """Max-norm gap between ``exp(ηW) x`` and the geodesic point of the gradient.

    The reference side uses a scaling-and-squaring Padé matrix exponential;
    the other side is ``cos(η‖∂L‖) x + sin(η‖∂L‖) ∂L/‖∂L‖`` with
    ``∂L = 2(H - L)x``.
    """
    M = _dense(H)
    x = np.asarray(x, dtype=float)
    d = x.size
    if d > QITE_MAX_DIM:
        raise ValueError(f"dense matrix exponential limited to d <= {QITE_MAX_DIM}, got {d}")
    W = commutator_generator(x, M)
    evolved = scipy.linalg.expm(eta * W) @ x
    hx = M @ x
    grad = 2.0 * (hx - np.dot(x, hx) * x)
    ng = np.linalg.norm(grad)
    if ng == 0.0:
        geodesic = x
    else:
        geodesic = np.cos(eta * ng) * x + np.sin(eta * ng) * grad / ng
    return float(np.max(np.abs(evolved - geodesic)))
