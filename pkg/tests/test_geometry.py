from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_symmetric
from egt.errors import DimensionMismatch, NotSymmetric
from egt.geometry import (
    as_state,
    exp_map,
    is_tangent,
    parallel_transport,
    project_tangent,
    riemannian_grad,
    self_transport,
)

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)


def unit(vec):
    return vec / np.linalg.norm(vec)


@st.composite
def point_and_tangent(draw, min_dim=2, max_dim=12):
    d = draw(st.integers(min_dim, max_dim))
    raw_x = draw(arrays(float, d, elements=finite))
    raw_v = draw(arrays(float, d, elements=finite))
    if np.linalg.norm(raw_x) < 1e-3:
        raw_x = np.eye(d)[0] + raw_x
    x = unit(raw_x)
    return x, project_tangent(x, raw_v)


# --- project_tangent ---------------------------------------------------------

def test_project_tangent_examples():
    x = np.array([1.0, 0.0])
    assert np.array_equal(project_tangent(x, np.array([0.0, 3.0])), [0.0, 3.0])
    assert np.allclose(project_tangent(x, np.array([5.0, 0.0])), [0.0, 0.0], atol=0)


def test_project_tangent_matches_dense_projector(rng):
    x = unit(rng.standard_normal(5))
    w = rng.standard_normal(5)
    dense = (np.eye(5) - np.outer(x, x)) @ w
    pw = project_tangent(x, w)
    assert np.allclose(pw, dense, atol=1e-14)
    assert np.allclose(project_tangent(x, pw), pw, atol=1e-14)
    assert abs(x @ pw) < 1e-14


def test_project_tangent_shape_check():
    with pytest.raises(DimensionMismatch):
        project_tangent(np.array([1.0, 0.0]), np.zeros(3))


def test_as_state_rejects_non_unit():
    with pytest.raises(ValueError):
        as_state(np.array([1.0, 1.0]))


# --- riemannian_grad ---------------------------------------------------------

def test_riemannian_grad_examples():
    x = np.array([1.0, 0.0])
    assert np.array_equal(riemannian_grad(x, np.diag([2.0, 5.0])), [0.0, 0.0])
    g = riemannian_grad(x, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(g, [0.0, 2.0], atol=0)
    assert g @ g == 4.0


def test_riemannian_grad_is_projected_euclidean_gradient(rng):
    H = random_symmetric(rng, 6)
    x = unit(rng.standard_normal(6))
    oracle = (np.eye(6) - np.outer(x, x)) @ (2.0 * H @ x)
    assert np.allclose(riemannian_grad(x, H), oracle, atol=1e-13)


def test_riemannian_grad_vanishes_at_eigenvectors(rng):
    H = random_symmetric(rng, 7)
    _, vecs = np.linalg.eigh(H)
    for j in range(7):
        assert np.max(np.abs(riemannian_grad(vecs[:, j], H))) < 1e-12


def test_riemannian_grad_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        riemannian_grad(np.array([1.0, 0.0]), np.array([[0.0, 1.0], [0.0, 0.0]]))


# --- exp_map -------------------------------------------------------------------

def test_exp_map_quarter_circle():
    y = exp_map(np.array([1.0, 0.0]), np.array([0.0, 2.0]), math.pi / 4)
    assert np.allclose(y, [0.0, 1.0], atol=1e-15)


def test_exp_map_zero_step_and_zero_direction(rng):
    x = unit(rng.standard_normal(4))
    v = project_tangent(x, rng.standard_normal(4))
    assert np.array_equal(exp_map(x, v, 0.0), x)
    assert np.array_equal(exp_map(x, np.zeros(4), 1.3), x)


def _rk4_geodesic(x, v, eta, h=1e-4):
    # γ'' = -‖v‖² γ, integrated as a first-order system
    speed2 = v @ v
    y, dy = x.copy(), v.copy()
    steps = int(round(eta / h))
    h = eta / steps
    for _ in range(steps):
        k1y, k1v = dy, -speed2 * y
        k2y, k2v = dy + 0.5 * h * k1v, -speed2 * (y + 0.5 * h * k1y)
        k3y, k3v = dy + 0.5 * h * k2v, -speed2 * (y + 0.5 * h * k2y)
        k4y, k4v = dy + h * k3v, -speed2 * (y + h * k3y)
        y = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        dy = dy + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return y


def test_exp_map_matches_geodesic_ode(rng):
    x = unit(rng.standard_normal(4))
    v = project_tangent(x, rng.standard_normal(4))
    assert np.allclose(exp_map(x, v, 0.37), _rk4_geodesic(x, v, 0.37), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(pv=point_and_tangent(), eta=st.floats(0.0, 50.0))
def test_exp_map_unit_norm(pv, eta):
    x, v = pv
    assert abs(np.linalg.norm(exp_map(x, v, eta)) - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(pv=point_and_tangent())
def test_exp_map_closed_great_circle(pv):
    x, v = pv
    nv = np.linalg.norm(v)
    if nv < 1e-6:
        return
    assert np.max(np.abs(exp_map(x, v, 2 * math.pi / nv) - x)) <= 1e-10


# --- transport -----------------------------------------------------------------

def test_parallel_transport_examples():
    x = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    assert np.allclose(parallel_transport(x, v, v, math.pi / 2), [-1.0, 0.0], atol=1e-15)
    x3 = np.array([1.0, 0.0, 0.0])
    v3 = np.array([0.0, 1.0, 0.0])
    z3 = np.array([0.0, 0.0, 1.0])
    for eta in (0.1, 1.0, 4.0):
        assert np.allclose(parallel_transport(x3, v3, z3, eta), z3, atol=1e-15)


def test_self_transport_closed_form(rng):
    x = unit(rng.standard_normal(5))
    v = project_tangent(x, rng.standard_normal(5))
    eta = 0.8
    s = eta * np.linalg.norm(v)
    expected = math.cos(s) * v - math.sin(s) * np.linalg.norm(v) * x
    assert np.allclose(parallel_transport(x, v, v, eta), expected, atol=1e-14)
    assert np.allclose(self_transport(x, v, eta), expected, atol=1e-14)
    assert abs(np.linalg.norm(expected) - np.linalg.norm(v)) < 1e-14
    assert abs(expected @ exp_map(x, v, eta)) < 1e-14


@settings(max_examples=200, deadline=None)
@given(pv=point_and_tangent(), eta=st.floats(0.0, 20.0), seed=st.integers(0, 2**32 - 1))
def test_parallel_transport_isometry_and_tangency(pv, eta, seed):
    x, v = pv
    r = np.random.default_rng(seed)
    z1 = project_tangent(x, r.standard_normal(x.size))
    z2 = project_tangent(x, r.standard_normal(x.size))
    t1 = parallel_transport(x, v, z1, eta)
    t2 = parallel_transport(x, v, z2, eta)
    y = exp_map(x, v, eta)
    assert abs(t1 @ t2 - z1 @ z2) <= 1e-10
    assert is_tangent(y, t1)
    assert abs(t1 @ y) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(pv=point_and_tangent(), eta=st.floats(0.0, 5.0), seed=st.integers(0, 2**32 - 1))
def test_parallel_transport_is_linear(pv, eta, seed):
    x, v = pv
    r = np.random.default_rng(seed)
    z1 = project_tangent(x, r.standard_normal(x.size))
    z2 = project_tangent(x, r.standard_normal(x.size))
    a, b = r.standard_normal(2)
    lhs = parallel_transport(x, v, a * z1 + b * z2, eta)
    rhs = a * parallel_transport(x, v, z1, eta) + b * parallel_transport(x, v, z2, eta)
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_transport_zero_direction_is_identity(rng):
    x = unit(rng.standard_normal(3))
    z = project_tangent(x, rng.standard_normal(3))
    assert np.array_equal(parallel_transport(x, np.zeros(3), z, 2.0), z)
