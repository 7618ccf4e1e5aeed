from __future__ import annotations

import math
import tracemalloc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_symmetric
from egt.coords import (
    canonicalize,
    jacobian_apply,
    jacobian_matrix,
    jacobian_transpose_apply,
    metric_diag,
    natural_gradient_x,
    regularize_singularities,
    theta_from_x,
    x_from_theta,
)
from egt.errors import DimensionMismatch, SingularMetric
from egt.geometry import riemannian_grad
from egt.gradients import grad_theta_chain


def chart_oracle(theta):
    """Amplitudes by the textbook product formula, one component at a time."""
    theta = np.asarray(theta, dtype=float)
    d = theta.size + 1
    x = np.empty(d)
    for i in range(d):
        prod = 1.0
        for m in range(min(i, d - 1)):
            prod *= math.sin(theta[m])
        x[i] = prod * (math.cos(theta[i]) if i < d - 1 else 1.0)
    return x


def jacobian_oracle(theta):
    """Dense Jacobian: differentiate each product factor separately."""
    theta = np.asarray(theta, dtype=float)
    d = theta.size + 1
    J = np.zeros((d, d - 1))
    for i in range(d):
        for col in range(d - 1):
            if col > i:
                continue
            prod = 1.0
            for m in range(min(i, d - 1)):
                prod *= math.cos(theta[m]) if m == col else math.sin(theta[m])
            if i < d - 1:
                prod *= -math.sin(theta[i]) if col == i else math.cos(theta[i])
            J[i, col] = prod
    return J


def random_angles(rng, d, margin=0.05):
    theta = rng.uniform(margin, math.pi - margin, d - 1)
    theta[-1] = rng.uniform(0.0, 2 * math.pi)
    return theta


@st.composite
def angles(draw, min_dim=2, max_dim=12):
    d = draw(st.integers(min_dim, max_dim))
    head = draw(st.lists(st.floats(0.01, math.pi - 0.01), min_size=d - 2, max_size=d - 2))
    last = draw(st.floats(0.0, 2 * math.pi, exclude_max=True))
    return np.array(head + [last])


# --- chart -----------------------------------------------------------------------

def test_x_from_theta_examples():
    assert np.allclose(x_from_theta([0.0, 0.0, 0.0]), [1, 0, 0, 0], atol=0)
    assert np.allclose(x_from_theta([math.pi / 2, math.pi / 2, 0.0]), [0, 0, 1, 0], atol=1e-16)


def test_theta_from_x_examples():
    assert np.allclose(theta_from_x([0.0, 1.0]), [math.pi / 2])
    assert np.allclose(theta_from_x([0.0, 0.0, -1.0]), [math.pi / 2, 3 * math.pi / 2])


def test_chart_matches_product_formula(rng):
    for d in (2, 3, 7, 11):
        theta = random_angles(rng, d)
        assert np.allclose(x_from_theta(theta), chart_oracle(theta), atol=1e-15)


def test_round_trips(rng):
    theta = random_angles(rng, 7)
    assert np.allclose(theta_from_x(x_from_theta(theta)), theta, atol=1e-12)
    x = rng.standard_normal(9)
    x /= np.linalg.norm(x)
    assert np.max(np.abs(x_from_theta(theta_from_x(x)) - x)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 16))
def test_chart_consistency_property(seed, d):
    r = np.random.default_rng(seed)
    x = r.standard_normal(d)
    x /= np.linalg.norm(x)
    tails = np.sqrt(np.cumsum((x**2)[::-1])[::-1])
    if tails[1:].min() <= 1e-9:
        return
    theta = theta_from_x(x)
    assert np.all(theta[:-1] >= 0) and np.all(theta[:-1] <= math.pi)
    assert 0.0 <= theta[-1] < 2 * math.pi
    assert np.max(np.abs(x_from_theta(theta) - x)) <= 1e-12


def test_theta_from_x_rejects_scalar():
    with pytest.raises(DimensionMismatch):
        theta_from_x([1.0])


def test_canonicalize_wraps_last_angle():
    out = canonicalize([1.0, 2 * math.pi + 0.5])
    assert np.allclose(out, [1.0, 0.5])
    # angles outside [0, π] are re-charted to an equivalent point
    res = canonicalize([-0.3, 1.0])
    assert np.allclose(x_from_theta(res), x_from_theta([-0.3, 1.0]), atol=1e-14)
    assert 0.0 <= res[0] <= math.pi


# --- metric and Jacobian -------------------------------------------------------

def test_metric_examples():
    assert np.allclose(metric_diag([math.pi / 2] * 4), np.ones(4))
    assert np.allclose(metric_diag([math.pi / 6, math.pi / 2]), [1.0, 0.25])


@settings(max_examples=100, deadline=None)
@given(theta=angles())
def test_metric_recursion(theta):
    g = metric_diag(theta)
    assert g[0] == 1.0
    assert np.allclose(g[1:], g[:-1] * np.sin(theta[:-1]) ** 2, atol=1e-12, rtol=0)


def test_metric_is_gram_of_jacobian(rng):
    for d in (3, 8, 12):
        theta = random_angles(rng, d)
        J = jacobian_oracle(theta)
        gram = J.T @ J
        assert np.allclose(np.diag(gram), metric_diag(theta), atol=1e-12)
        assert np.max(np.abs(gram - np.diag(np.diag(gram)))) < 1e-10


def test_jacobian_examples():
    assert np.allclose(jacobian_apply([math.pi / 2], [1.0]), [-1.0, 0.0], atol=1e-16)
    assert np.array_equal(jacobian_apply([0.3, 1.0, 2.0], np.zeros(3)), np.zeros(4))


def test_jacobian_against_dense_oracles(rng):
    for d in (2, 5, 10):
        theta = random_angles(rng, d)
        J = jacobian_oracle(theta)
        w = rng.standard_normal(d - 1)
        y = rng.standard_normal(d)
        assert np.allclose(jacobian_apply(theta, w), J @ w, atol=1e-12)
        assert np.allclose(jacobian_transpose_apply(theta, y), J.T @ y, atol=1e-12)
        assert np.allclose(jacobian_matrix(theta), J, atol=1e-13)


def test_jacobian_matches_finite_differences(rng):
    theta = random_angles(rng, 6)
    step = 1e-6
    fd = np.column_stack([(x_from_theta(theta + step * e) - x_from_theta(theta - step * e)) / (2 * step)
                          for e in np.eye(5)])
    assert np.allclose(jacobian_matrix(theta), fd, atol=1e-9)


def test_pushforward_identity(rng):
    for d in (2, 4, 8, 12):
        theta = random_angles(rng, d)
        J = jacobian_oracle(theta)
        x = chart_oracle(theta)
        lhs = J @ np.diag(1.0 / metric_diag(theta)) @ J.T
        assert np.allclose(lhs, np.eye(d) - np.outer(x, x), atol=1e-10)


def test_jacobian_apply_memory_is_linear():
    d = 20_000
    rng = np.random.default_rng(0)
    theta = random_angles(rng, d, margin=0.5)
    w = rng.standard_normal(d - 1)
    tracemalloc.start()
    jacobian_apply(theta, w)
    jacobian_transpose_apply(theta, rng.standard_normal(d))
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    # a dense (d-1) x d buffer would need 3.2 GB; allow a few dozen length-d vectors
    assert peak < 40 * d * 8


def test_jacobian_shape_checks():
    with pytest.raises(DimensionMismatch):
        jacobian_apply([0.1, 0.2], [1.0])
    with pytest.raises(DimensionMismatch):
        jacobian_transpose_apply([0.1, 0.2], [1.0, 2.0])


# --- natural gradient ----------------------------------------------------------

def test_natural_gradient_examples(rng):
    theta = random_angles(rng, 5)
    assert np.array_equal(natural_gradient_x(theta, np.zeros(4)), np.zeros(5))
    c = 1.7
    assert np.allclose(natural_gradient_x([math.pi / 2], [c]), [c, 0.0], atol=1e-15)


def test_natural_gradient_equals_negative_riemannian_gradient(rng):
    H = random_symmetric(rng, 8)
    theta = random_angles(rng, 8)
    x = x_from_theta(theta)
    nat = natural_gradient_x(theta, grad_theta_chain(theta, H))
    assert np.allclose(nat, -riemannian_grad(x, H), atol=1e-10)
    assert np.allclose(nat, -2.0 * (H @ x - (x @ H @ x) * x), atol=1e-10)


def test_natural_gradient_singular_metric():
    with pytest.raises(SingularMetric) as info:
        natural_gradient_x([0.0, 1.0, 0.5], [1.0, 1.0, 1.0])
    assert info.value.index == 1


# --- singularity reset ---------------------------------------------------------

def test_regularize_examples():
    out, idx = regularize_singularities([1e-5, 1.0], 1e-3)
    assert np.allclose(out, [math.pi / 2, 1.0]) and idx == [0]
    out, idx = regularize_singularities([math.pi / 2, math.pi / 2], 1e-3)
    assert np.array_equal(out, [math.pi / 2, math.pi / 2]) and idx == []
    out, idx = regularize_singularities([math.pi - 1e-5, 1.0], 1e-3)
    assert np.allclose(out, [math.pi / 2, 1.0]) and idx == [0]


def test_regularize_never_touches_last_angle():
    out, idx = regularize_singularities([1.0, 0.0], 1e-3)
    assert idx == [] and out[-1] == 0.0


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(3, 20))
def test_regularized_metric_is_positive(seed, d):
    r = np.random.default_rng(seed)
    theta = r.uniform(0, math.pi, d - 1)
    theta[r.random(d - 1) < 0.3] = r.choice([0.0, math.pi, 1e-7])
    theta[-1] = r.uniform(0, 2 * math.pi)
    out, idx = regularize_singularities(theta, 1e-3)
    assert np.all(metric_diag(out) > 0.0)
    assert all(abs(math.sin(out[j])) > 1e-3 for j in range(d - 2))
