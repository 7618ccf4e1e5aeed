"""Fixed-seed invariant suites runnable from the command line."""

from __future__ import annotations

import math

import numpy as np

from .. import analysis, coords, geometry, gradients
from ..hamiltonian import build_xxz, project_pauli

SUITES = ("geometry", "coords", "gradients", "variance", "qite")


def _check(name: str, value: float, tol: float) -> dict:
    return {"name": name, "value": float(value), "tolerance": tol, "passed": bool(value <= tol)}


def _random_state(rng, d):
    return analysis.sample_uniform_sphere(d, rng)


def _random_symmetric(rng, d):
    a = rng.standard_normal((d, d))
    return (a + a.T) / 2.0


def _random_angles(rng, d):
    theta = rng.uniform(0.1, math.pi - 0.1, d - 1)
    theta[-1] = rng.uniform(0.0, 2.0 * math.pi)
    return theta


def suite_geometry(seed: int = 0, instances: int = 1000) -> list[dict]:
    rng = np.random.default_rng(seed)
    norm_err = iso_err = self_err = tangent_err = loop_err = 0.0
    for d in (2, 4, 8, 16):
        for _ in range(instances):
            x = _random_state(rng, d)
            v = geometry.project_tangent(x, rng.standard_normal(d))
            z1 = geometry.project_tangent(x, rng.standard_normal(d))
            z2 = geometry.project_tangent(x, rng.standard_normal(d))
            eta = rng.uniform(0.0, 3.0)
            y = geometry.exp_map(x, v, eta)
            norm_err = max(norm_err, abs(np.linalg.norm(y) - 1.0))
            t1 = geometry.parallel_transport(x, v, z1, eta)
            t2 = geometry.parallel_transport(x, v, z2, eta)
            iso_err = max(iso_err, abs(np.dot(t1, t2) - np.dot(z1, z2)))
            tangent_err = max(tangent_err, abs(np.dot(t1, y)))
            self_err = max(self_err, np.max(np.abs(geometry.parallel_transport(x, v, v, eta)
                                                   - geometry.self_transport(x, v, eta))))
            loop_err = max(loop_err, np.max(np.abs(geometry.exp_map(x, v, 2 * math.pi / np.linalg.norm(v)) - x)))
    return [
        _check("exp_map unit norm", norm_err, 1e-12),
        _check("transport isometry", iso_err, 1e-10),
        _check("transport tangency", tangent_err, 1e-10),
        _check("self-transport closed form", self_err, 1e-12),
        _check("closed great circle", loop_err, 1e-10),
    ]


def suite_coords(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    round_trip = jac = push = metric = 0.0
    for d in (2, 3, 5, 8, 12):
        for _ in range(50):
            x = _random_state(rng, d)
            round_trip = max(round_trip, np.max(np.abs(coords.x_from_theta(coords.theta_from_x(x)) - x)))
            theta = _random_angles(rng, d)
            J = coords.jacobian_matrix(theta)
            w = rng.standard_normal(d - 1)
            jac = max(jac, np.max(np.abs(coords.jacobian_apply(theta, w) - J @ w)))
            g = coords.metric_diag(theta)
            gram = J.T @ J
            metric = max(metric, np.max(np.abs(gram - np.diag(g))))
            xt = coords.x_from_theta(theta)
            proj = np.eye(d) - np.outer(xt, xt)
            push = max(push, np.max(np.abs(J @ np.diag(1.0 / g) @ J.T - proj)))
    return [
        _check("chart round trip", round_trip, 1e-12),
        _check("structured Jacobian product", jac, 1e-12),
        _check("metric equals JᵀJ", metric, 1e-10),
        _check("pushforward J g⁻¹ Jᵀ = Π", push, 1e-10),
    ]


def suite_gradients(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    rel = nat = 0.0
    ledger_ok = True
    for d in (4, 8, 12):
        for _ in range(50):
            H = _random_symmetric(rng, d)
            theta = _random_angles(rng, d)
            counters = gradients.CallCounters()
            chain = gradients.grad_theta_chain(theta, H)
            structured = gradients.grad_theta_structured(theta, H, counters)
            fd = gradients.fd_gradient_oracle(theta, H, 1e-6)
            scale = max(1.0, np.max(np.abs(chain)))
            rel = max(rel, np.max(np.abs(structured - chain)) / scale, np.max(np.abs(fd - chain)) / scale)
            ledger_ok &= counters.loss_calls == 2 * (d - 1) + 1
            x = coords.x_from_theta(theta)
            nat = max(nat, np.max(np.abs(coords.natural_gradient_x(theta, chain) + gradients.grad_x(x, H))))
    return [
        _check("gradient routes agree (relative)", rel, 1e-6),
        _check("natural gradient equals -2(H-L)x", nat, 1e-10),
        {"name": "structured gradient uses 2M+1 loss calls", "value": float(ledger_ok), "tolerance": None,
         "passed": bool(ledger_ok)},
    ]


def suite_variance(seed: int = 0, samples: int = 1_000_000) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []
    for label, H in (("random d=4", _random_symmetric(rng, 4)),
                     ("xxz n=4", project_pauli(*build_xxz(4, 0.5)).matrix)):
        rep = analysis.mc_variances(H, samples, rng)
        zl, zv = rep.z_scores()
        out.append(_check(f"Var[L] {label} (|z|)", abs(zl), 3.0))
        out.append(_check(f"Var[v_j] {label} (max |z|)", float(np.max(np.abs(zv))), 3.0))
    moments = analysis.moment_checks(4, samples, rng)
    out.append(_check("sphere moments d=4 (max |z|)", max(abs(m["z"]) for m in moments.values()), 3.0))
    return out


def suite_qite(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 17))
        H = _random_symmetric(rng, d)
        x = _random_state(rng, d)
        for eta in (0.01, 0.1, 1.0):
            worst = max(worst, analysis.qite_equivalence_check(x, H, eta))
    return [_check("exp(ηW)x equals the geodesic point", worst, 1e-10)]


def validate(suite: str = "all", seed: int = 0) -> dict:
    """Run one suite (or ``"all"``) and return a JSON-ready verdict."""
    names = SUITES if suite == "all" else (suite,)
    table = {
        "geometry": suite_geometry, "coords": suite_coords, "gradients": suite_gradients,
        "variance": suite_variance, "qite": suite_qite,
    }
    results = {}
    for name in names:
        if name not in table:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES} or 'all'")
        results[name] = table[name](seed=seed)
    passed = all(c["passed"] for checks in results.values() for c in checks)
    return {"suite": suite, "seed": seed, "passed": passed, "results": results}
