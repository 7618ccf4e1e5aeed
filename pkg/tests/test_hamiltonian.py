from __future__ import annotations

import functools
import json
import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from egt.errors import ConfigError, NotInvariant, NotRealHamiltonian
from egt.hamiltonian import (
    PauliHamiltonian,
    SubspaceHamiltonian,
    build_tfim,
    build_xxz,
    enumerate_basis,
    exact_ground,
    fidelity_to_ground,
    ground_sector,
    hamiltonian_from_dict,
    hamiltonian_to_dict,
    hartree_label,
    load_hamiltonian,
    project_pauli,
    save_hamiltonian,
    symmetry_reduce,
    warm_start_state,
)

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_matrix(h: PauliHamiltonian) -> np.ndarray:
    """Full 2^n matrix; qubit 0 is the leftmost tensor factor (most significant bit)."""
    dim = 2**h.n
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, word in h.terms:
        out += coeff * functools.reduce(np.kron, [PAULI[p] for p in word])
    return out


def sliced(h, basis):
    full = kron_matrix(h)
    idx = np.asarray(basis.codes)
    return full[np.ix_(idx, idx)]


def random_real_pauli_sum(rng, n, terms=12):
    """Words with an even number of Y factors are real."""
    out = []
    while len(out) < terms:
        word = "".join(rng.choice(list("IXYZ"), n))
        if word.count("Y") % 2 == 0:
            out.append((float(rng.standard_normal()), word))
    return PauliHamiltonian.from_terms(n, out)


# --- bases -----------------------------------------------------------------------

def test_basis_examples():
    assert enumerate_basis(6, "hw", 2).dim == 15
    assert enumerate_basis(9, "hw_le", 3).dim == 1 + 9 + 36 + 84
    b = enumerate_basis(4, "hw", 2)
    assert b.dim == 6 and b.labels[0] == "0011"


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 12), data=st.data())
def test_basis_sizes_are_binomial(n, data):
    k = data.draw(st.integers(0, n))
    assert enumerate_basis(n, "hw", k).dim == math.comb(n, k)
    assert enumerate_basis(n, "hw_le", k).dim == sum(math.comb(n, j) for j in range(k + 1))


def test_basis_lookup_and_validation():
    b = enumerate_basis(4, "hw", 2)
    assert b.labels[b.index_of("1010")] == "1010"
    with pytest.raises(KeyError):
        b.index_of("1110")
    with pytest.raises(ValueError):
        enumerate_basis(4, "hw", 5)
    with pytest.raises(ValueError):
        enumerate_basis(3, "explicit", labels=["01"])


# --- projection ------------------------------------------------------------------

def test_projection_examples():
    basis = enumerate_basis(2, "hw", 1)
    assert basis.labels == ["01", "10"]
    zz = project_pauli(PauliHamiltonian(2, ((1.0, "ZZ"),)), basis)
    assert np.array_equal(zz.dense(), -np.eye(2))
    hop = project_pauli(PauliHamiltonian(2, ((1.0, "XX"), (1.0, "YY"))), basis)
    assert np.array_equal(hop.dense(), [[0.0, 2.0], [2.0, 0.0]])


def test_projection_matches_kronecker_on_hw_basis(rng):
    h = random_real_pauli_sum(rng, 4)
    basis = enumerate_basis(4, "hw", 2)
    oracle = sliced(h, basis)
    assert np.max(np.abs(oracle.imag)) < 1e-14
    assert np.allclose(project_pauli(h, basis).dense(), oracle.real, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_projection_full_space_reproduces_kronecker(n, seed):
    r = np.random.default_rng(seed)
    h = random_real_pauli_sum(r, n, terms=8)
    basis = enumerate_basis(n, "hw_le", n)
    assert np.allclose(project_pauli(h, basis).dense(), kron_matrix(h).real, atol=1e-13)


def test_projection_full_space_n8(rng):
    h = random_real_pauli_sum(rng, 8, terms=20)
    basis = enumerate_basis(8, "hw_le", 8)
    assert np.allclose(project_pauli(h, basis).dense(), kron_matrix(h).real, atol=1e-13)


def test_sparse_storage_above_threshold(rng):
    h, basis = build_xxz(6, 0.5)
    H = project_pauli(h, basis, dense_max=4)
    assert H.is_sparse
    assert np.allclose(H.dense(), project_pauli(h, basis).dense(), atol=0)


def test_lone_y_is_rejected():
    with pytest.raises(NotRealHamiltonian) as info:
        project_pauli(PauliHamiltonian(2, ((1.0, "YI"),)), enumerate_basis(2, "hw_le", 2))
    assert abs(info.value.imag) == 1.0
    assert "|H|" in str(info.value)


def test_duplicate_words_rejected_but_mergeable():
    with pytest.raises(ValueError):
        PauliHamiltonian(1, ((1.0, "Z"), (2.0, "Z")))
    h = PauliHamiltonian.from_terms(1, [(1.0, "Z"), (2.0, "Z")])
    assert h.terms == ((3.0, "Z"),)


# --- models --------------------------------------------------------------------

def test_xxz_examples():
    h, basis = build_xxz(4, 0.5)
    assert len(h.terms) == 12 and basis.dim == 6
    H = project_pauli(h, basis)
    e0, _ = exact_ground(H)
    assert abs(e0 - np.linalg.eigvalsh(sliced(h, basis).real)[0]) < 1e-12
    h0, _ = build_xxz(4, 0.0)
    assert all("Z" not in w for c, w in h0.terms if c != 0.0)


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_xxz_half_filling_holds_the_ground_state(n):
    h, basis = build_xxz(n, 0.5)
    sub = exact_ground(project_pauli(h, basis))[0]
    full = exact_ground(project_pauli(h, enumerate_basis(n, "hw_le", n)))[0]
    assert abs(sub - full) <= 1e-10


def test_xxz_rejects_odd_sizes():
    with pytest.raises(ValueError):
        build_xxz(5, 0.5)


def test_tfim_examples():
    h, basis = build_tfim(9, 0.033, 3)
    assert basis.dim == 130 and len(h.terms) == 18
    H0 = project_pauli(*build_tfim(5, 0.0, 2))
    assert np.count_nonzero(H0.dense() - np.diag(np.diag(H0.dense()))) == 0


def test_tfim_subspace_versus_full_space():
    h, basis = build_tfim(6, 0.05, 2)
    sub = exact_ground(project_pauli(h, basis))[0]
    full = np.linalg.eigvalsh(kron_matrix(h).real)[0]
    assert abs(sub - full) <= 1e-6


def test_warm_start_examples():
    x = warm_start_state(4, 2, 0.9)
    idx = enumerate_basis(4, "hw", 2).index_of(hartree_label(4, 2))
    assert hartree_label(4, 2) == "1100"
    assert math.isclose(x[idx], math.sqrt(0.9), rel_tol=0, abs_tol=1e-15)
    others = np.delete(x, idx)
    assert np.allclose(others, math.sqrt(0.1 / 5), atol=1e-16)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 12), data=st.data(), alpha=st.floats(0.01, 0.99))
def test_warm_start_normalized_with_exact_fidelity(n, data, alpha):
    k = data.draw(st.integers(1, n - 1))
    x = warm_start_state(n, k, alpha)
    idx = enumerate_basis(n, "hw", k).index_of(hartree_label(n, k))
    assert abs(x @ x - 1.0) <= 1e-14
    assert abs(x[idx] ** 2 - alpha) <= 1e-14


def test_warm_start_rejects_bad_alpha():
    with pytest.raises(ValueError):
        warm_start_state(4, 2, 1.0)


# --- exact ground --------------------------------------------------------------

def test_exact_ground_examples():
    e0, basis = exact_ground(np.diag([3.0, 1.0, 2.0]))
    assert e0 == 1.0 and len(basis) == 1 and abs(abs(basis[0][1]) - 1.0) < 1e-15
    e0, basis = exact_ground(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert math.isclose(e0, -1.0) and len(basis) == 1
    assert abs(abs(basis[0] @ np.array([1.0, -1.0]) / math.sqrt(2)) - 1.0) < 1e-14


def test_exact_ground_xxz8_against_naive_eigensolver():
    H = project_pauli(*build_xxz(8, 0.5))
    e0, _ = exact_ground(H)
    # a second LAPACK driver as the independent route
    assert abs(e0 - scipy.linalg.eigh(H.dense(), eigvals_only=True, driver="ev")[0]) <= 1e-10


def test_exact_ground_collects_degenerate_space():
    e0, basis = exact_ground(np.diag([-1.0, 2.0, -1.0, 0.5]))
    assert e0 == -1.0 and len(basis) == 2
    sub = np.column_stack(basis)
    assert np.allclose(sub.T @ sub, np.eye(2), atol=1e-14)


def test_lanczos_agrees_with_dense():
    H = project_pauli(*build_xxz(10, 0.5))
    ed, gd = exact_ground(H, method="dense")
    el, gl = exact_ground(SubspaceHamiltonian(H.basis, sp.csr_matrix(H.dense())), method="lanczos")
    assert abs(ed - el) <= 1e-10
    assert len(gd) == len(gl)
    assert fidelity_to_ground(gl[0], gd) > 1 - 1e-10


def test_fidelity_examples():
    ground = [np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])]
    assert fidelity_to_ground(ground[0], ground) == 1.0
    assert fidelity_to_ground(np.array([0.0, 0.0, 1.0]), ground) == 0.0
    assert math.isclose(fidelity_to_ground(np.array([1.0, 1.0, 0.0]) / math.sqrt(2), ground), 1.0)


# --- symmetry sectors ------------------------------------------------------------

def _orbits(n, labels):
    # orbit oracle: close each label under rotation and reversal on strings
    remaining, orbits = set(labels), []
    while remaining:
        seed = min(remaining)
        orbit, frontier = {seed}, [seed]
        while frontier:
            s = frontier.pop()
            for t in (s[-1] + s[:-1], s[::-1]):
                if t not in orbit:
                    orbit.add(t)
                    frontier.append(t)
        orbits.append(orbit)
        remaining -= orbit
    return orbits


def test_symmetric_sector_n4():
    H = project_pauli(*build_xxz(4, 0.5))
    red = symmetry_reduce(H, 4)
    orbits = _orbits(4, H.basis.labels)
    assert sorted(map(sorted, orbits)) == [["0011", "0110", "1001", "1100"], ["0101", "1010"]]
    assert red.dim == 2
    V = red.embedding.toarray()
    assert np.allclose(V.T @ V, np.eye(2), atol=1e-15)
    assert np.allclose(red.dense(), V.T @ H.dense() @ V, atol=1e-14)


@pytest.mark.parametrize("n", [4, 8])
def test_symmetric_sector_keeps_ground_energy_when_it_holds_it(n):
    H = project_pauli(*build_xxz(n, 0.5))
    red = symmetry_reduce(H, n)
    assert red.dim == len(_orbits(n, H.basis.labels))
    assert abs(np.linalg.eigvalsh(red.dense())[0] - exact_ground(H)[0]) <= 1e-10


def test_n6_ground_state_lives_outside_the_symmetric_sector():
    H = project_pauli(*build_xxz(6, 0.5))
    e0 = exact_ground(H)[0]
    trivial = np.linalg.eigvalsh(symmetry_reduce(H, 6).dense())[0]
    assert trivial > e0 + 1.0
    red, chars = ground_sector(H, 6)
    assert chars == (-1, -1)
    assert abs(np.linalg.eigvalsh(red.dense())[0] - e0) <= 1e-10


def test_identity_reduces_to_identity():
    basis = enumerate_basis(6, "hw", 3)
    red = symmetry_reduce(SubspaceHamiltonian(basis, np.eye(basis.dim)), 6)
    assert np.allclose(red.dense(), np.eye(red.dim), atol=1e-15)


def test_non_invariant_hamiltonian_rejected():
    basis = enumerate_basis(4, "hw", 2)
    with pytest.raises(NotInvariant):
        symmetry_reduce(project_pauli(PauliHamiltonian(4, ((1.0, "ZZII"),)), basis), 4)


# --- JSON ----------------------------------------------------------------------

def test_json_round_trip(tmp_path):
    h, basis = build_tfim(5, 0.2, 2)
    path = tmp_path / "h.json"
    save_hamiltonian(path, h, basis)
    h2, basis2 = load_hamiltonian(path)
    assert h2.terms == h.terms and np.array_equal(basis2.codes, basis.codes) and basis2.kind == basis.kind
    explicit = enumerate_basis(3, "explicit", labels=["101", "011"])
    raw = hamiltonian_to_dict(PauliHamiltonian(3, ((1.0, "ZZZ"),)), explicit)
    assert hamiltonian_from_dict(json.loads(json.dumps(raw)))[1].labels == ["011", "101"]


@pytest.mark.parametrize("raw", [
    {"terms": []},
    {"n": 2, "terms": [{"coeff": "x", "pauli": "ZZ"}]},
    {"n": 2, "terms": [{"coeff": 1.0, "pauli": "zz"}]},
    {"n": 2, "terms": [{"coeff": 1.0, "pauli": "ZQ"}]},
    {"n": 2, "terms": [{"coeff": 1.0}]},
    {"n": 2.5, "terms": []},
])
def test_json_errors(raw):
    with pytest.raises(ConfigError):
        hamiltonian_from_dict(raw)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_hamiltonian(tmp_path / "absent.json")
