"""Differential geometry of the unit hypersphere S^{d-1} embedded in R^d.

Points and tangent vectors are plain 1-D float arrays. A tangent vector at
``x`` is any ``w`` with ``<x, w> = 0``; the base point is passed alongside
rather than stored. Every function here is pure.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotSymmetric

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10


def as_state(x, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the sphere."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DimensionMismatch(f"state must be a non-empty 1-D vector, got shape {x.shape}")
    err = abs(np.linalg.norm(x) - 1.0)
    if err > tol:
        raise ValueError(f"state is not unit norm (|‖x‖ - 1| = {err:.3e})")
    return x


def is_tangent(x, w, tol: float = ORTHO_TOL) -> bool:
    w = np.asarray(w, dtype=float)
    return abs(float(np.dot(x, w))) <= tol * max(1.0, float(np.linalg.norm(w)))


def _check_same_dim(x, *vectors):
    for w in vectors:
        if np.shape(w) != np.shape(x):
            raise DimensionMismatch(f"expected a vector of shape {np.shape(x)}, got {np.shape(w)}")


def project_tangent(x, w) -> np.ndarray:
    """Orthogonal projection of ``w`` onto the tangent space at ``x``: ``(1 - x xᵀ) w``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    _check_same_dim(x, w)
    return w - np.dot(x, w) * x


def check_symmetric(H, tol: float = 1e-12) -> None:
    """Raise NotSymmetric when ``max|H - Hᵀ|`` exceeds ``tol`` relative to ``max(1, max|H|)``."""
    if hasattr(H, "tocsr"):
        diff = H - H.T
        asym = abs(diff).max() if diff.nnz else 0.0
        scale = abs(H).max() if H.nnz else 0.0
    else:
        H = np.asarray(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {H.shape}")
        asym = np.max(np.abs(H - H.T)) if H.size else 0.0
        scale = np.max(np.abs(H)) if H.size else 0.0
    if asym > tol * max(1.0, float(scale)):
        raise NotSymmetric(f"operator is not symmetric (max |H_ij - H_ji| = {asym:.3e})")


def _operator(H):
    # SubspaceHamiltonian exposes .matrix; raw arrays and sparse matrices pass through.
    return getattr(H, "matrix", H)


def riemannian_grad(x, H, check: bool = True) -> np.ndarray:
    """Riemannian gradient of the quadratic form ``xᵀHx`` on the sphere.

    Equal to ``2 (H - L) x`` where ``L = xᵀHx``; it is already tangent, so no
    projection is needed.
    """
    x = np.asarray(x, dtype=float)
    M = _operator(H)
    if M.shape != (x.size, x.size):
        raise DimensionMismatch(f"operator shape {M.shape} does not match state dimension {x.size}")
    if check:
        check_symmetric(M)
    hx = M @ x
    return 2.0 * (hx - np.dot(x, hx) * x)


def exp_map(x, v, eta: float = 1.0) -> np.ndarray:
    """Exponential map ``cos(η‖v‖) x + sin(η‖v‖) v/‖v‖``; ``x`` itself when ``v = 0``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_same_dim(x, v)
    nv = np.linalg.norm(v)
    if nv == 0.0 or eta == 0.0:
        return x.copy()
    s = eta * nv
    return np.cos(s) * x + np.sin(s) * (v / nv)


def parallel_transport(x, v, zeta, eta: float = 1.0) -> np.ndarray:
    """Transport ``zeta`` from ``x`` to ``exp_map(x, v, eta)`` along the geodesic of ``v``.

    The component of ``zeta`` orthogonal to the plane spanned by ``x`` and ``v``
    is left alone; the in-plane component rotates with the geodesic. The
    result is re-projected onto the tangent space of the end point to keep
    roundoff from accumulating over long runs.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    _check_same_dim(x, v, zeta)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return zeta.copy()
    s = eta * nv
    vz = np.dot(v, zeta)
    out = zeta - np.sin(s) * (vz / nv) * x + (np.cos(s) - 1.0) * (vz / nv**2) * v
    end = np.cos(s) * x + np.sin(s) * (v / nv)
    return out - np.dot(end, out) * end


def self_transport(x, v, eta: float = 1.0) -> np.ndarray:
    """Closed form of ``parallel_transport(x, v, v, eta)``: the geodesic velocity at time ``eta``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    s = eta * nv
    return np.cos(s) * v - np.sin(s) * nv * x
