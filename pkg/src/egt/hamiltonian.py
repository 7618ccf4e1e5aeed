"""Real symmetric Hamiltonians restricted to computational-basis subspaces.

Bit convention: in an ``n``-bit label string, character ``j`` is qubit ``j``.
As an integer code that is bit ``n - 1 - j``, so qubit 0 is the most
significant bit and string order equals numeric order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConvergenceError, DimensionMismatch, NotInvariant, NotRealHamiltonian

DENSE_MAX_DIM = 4096
MAX_QUBITS = 24
BASIS_KINDS = ("hw", "hw_le", "explicit")
_PAULI = frozenset("IXYZ")


def _popcount(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros(codes.shape, dtype=np.int64)
    c = codes.copy()
    while np.any(c):
        out += c & 1
        c >>= 1
    return out


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Ordered set of computational basis states.

    ``codes`` holds the integer labels in ascending order; ``labels`` gives
    them back as ``n``-character bit strings.
    """

    n: int
    codes: np.ndarray
    kind: str = "explicit"
    k: int | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 1 or codes.size == 0:
            raise ValueError("basis must contain at least one label")
        if np.any(np.diff(codes) <= 0):
            raise ValueError("basis labels must be unique and sorted ascending")
        if codes[0] < 0 or codes[-1] >= (1 << self.n):
            raise ValueError(f"basis label out of range for n = {self.n}")
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        weights = _popcount(codes)
        if self.kind == "hw" and np.any(weights != self.k):
            raise ValueError(f"every label of a fixed-HW({self.k}) basis must have weight {self.k}")
        if self.kind == "hw_le" and np.any(weights > self.k):
            raise ValueError(f"every label of a bounded-HW({self.k}) basis must have weight <= {self.k}")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    @property
    def dim(self) -> int:
        return int(self.codes.size)

    @property
    def labels(self) -> list[str]:
        return [format(int(c), f"0{self.n}b") for c in self.codes]

    def index_of(self, label) -> int:
        code = int(label, 2) if isinstance(label, str) else int(label)
        i = int(np.searchsorted(self.codes, code))
        if i == self.dim or self.codes[i] != code:
            raise KeyError(f"label {label!r} is not in the basis")
        return i


def enumerate_basis(n: int, kind: str, k: int | None = None, labels=None) -> SubspaceBasis:
    """Basis of fixed Hamming weight (``"hw"``), weight at most ``k`` (``"hw_le"``), or explicit labels."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    if kind == "explicit":
        if not labels:
            raise ValueError("explicit basis needs a non-empty label list")
        codes = []
        for lab in labels:
            if isinstance(lab, str):
                if len(lab) != n or set(lab) - {"0", "1"}:
                    raise ValueError(f"label {lab!r} is not an {n}-bit string")
                codes.append(int(lab, 2))
            else:
                codes.append(int(lab))
        return SubspaceBasis(n, np.unique(codes), "explicit")
    if kind not in ("hw", "hw_le"):
        raise ValueError(f"unknown basis kind {kind!r}")
    if k is None or not 0 <= k <= n:
        raise ValueError(f"Hamming weight k must satisfy 0 <= k <= n = {n}, got {k}")
    weights = [k] if kind == "hw" else range(k + 1)
    codes = []
    for w in weights:
        for ones in itertools.combinations(range(n), w):
            codes.append(sum(1 << (n - 1 - q) for q in ones))
    return SubspaceBasis(n, np.sort(np.asarray(codes, dtype=np.int64)), kind, k)


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real linear combination of Pauli words, each word a string over ``IXYZ`` of length ``n``."""

    n: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        seen = set()
        clean = []
        for coeff, word in self.terms:
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ValueError(f"coefficient of {word!r} is not finite")
            if len(word) != self.n or set(word) - _PAULI:
                raise ValueError(f"Pauli word {word!r} is not a length-{self.n} string over IXYZ")
            if word in seen:
                raise ValueError(f"duplicate Pauli word {word!r}; merge coefficients first")
            seen.add(word)
            clean.append((coeff, word))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_terms(cls, n: int, terms) -> PauliHamiltonian:
        """Build from possibly repeated words, summing their coefficients."""
        merged: dict[str, float] = {}
        for coeff, word in terms:
            merged[word] = merged.get(word, 0.0) + float(coeff)
        return cls(n, tuple((c, w) for w, c in merged.items()))


@dataclass(frozen=True, eq=False)
class SubspaceHamiltonian:
    """Real symmetric operator on ``span(basis)``.

    ``matrix`` is a dense array up to ``DENSE_MAX_DIM`` and CSR beyond. When
    the operator comes from a symmetry reduction, ``embedding`` holds the
    orthonormal columns (in the parent basis) that define the reduced
    coordinates and ``basis`` lists one representative label per column.
    """

    basis: SubspaceBasis
    matrix: np.ndarray | sp.csr_matrix
    embedding: np.ndarray | sp.csr_matrix | None = field(default=None)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def __matmul__(self, x):
        return self.matrix @ x


def _word_masks(word: str, n: int) -> tuple[int, int, int]:
    xmask = ymask = zmask = 0
    for q, ch in enumerate(word):
        bit = 1 << (n - 1 - q)
        if ch == "X":
            xmask |= bit
        elif ch == "Y":
            ymask |= bit
        elif ch == "Z":
            zmask |= bit
    return xmask, ymask, zmask


def project_pauli(h: PauliHamiltonian, basis: SubspaceBasis, dense_max: int = DENSE_MAX_DIM) -> SubspaceHamiltonian:
    """Matrix of ``h`` in ``basis`` by bit algebra on the integer labels.

    For a word with flip mask ``X|Y`` and sign mask ``Y|Z``,
    ``P|b> = i^{#Y} (-1)^{popcount(b & (Y|Z))} |b ^ (X|Y)>``. Terms that leave the
    subspace are dropped. The imaginary parts of all terms must cancel entry
    by entry (to roundoff), otherwise :class:`NotRealHamiltonian` names the
    worst entry.
    """
    if h.n != basis.n:
        raise DimensionMismatch(f"Hamiltonian acts on {h.n} qubits but the basis has n = {basis.n}")
    codes = basis.codes
    d = basis.dim
    cols_all = np.arange(d)
    rows, cols, re_vals, im_vals = [], [], [], []
    scale = max(1.0, sum(abs(c) for c, _ in h.terms))
    for coeff, word in h.terms:
        if coeff == 0.0:
            continue
        xmask, ymask, zmask = _word_masks(word, h.n)
        flip = xmask | ymask
        target = codes ^ flip
        pos = np.searchsorted(codes, target)
        pos_c = np.minimum(pos, d - 1)
        inside = codes[pos_c] == target
        if not np.any(inside):
            continue
        src = codes[inside]
        sign = 1.0 - 2.0 * (_popcount(src & (ymask | zmask)) & 1)
        ny = bin(ymask).count("1")
        # i^ny is one of 1, i, -1, -i
        unit = (1.0, 1j, -1.0, -1j)[ny % 4]
        val = coeff * unit * sign
        rows.append(pos_c[inside])
        cols.append(cols_all[inside])
        re_vals.append(np.real(val) * np.ones(src.size))
        im_vals.append(np.imag(val) * np.ones(src.size))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        re = np.concatenate(re_vals)
        im = np.concatenate(im_vals)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        re = im = np.zeros(0)
    imag = sp.coo_matrix((im, (r, c)), shape=(d, d)).tocsr()
    imag.sum_duplicates()
    if imag.nnz:
        big = np.abs(imag.data)
        worst = int(np.argmax(big))
        if big[worst] > 1e-12 * scale:
            coo = imag.tocoo()
            i, j = int(coo.row[worst]), int(coo.col[worst])
            raise NotRealHamiltonian(i, j, float(coo.data[worst]), basis.labels)
    real = sp.coo_matrix((re, (r, c)), shape=(d, d)).tocsr()
    real = (real + real.T) * 0.5
    if d <= dense_max:
        mat = real.toarray()
        mat = (mat + mat.T) * 0.5
    else:
        mat = real.tocsr()
        mat.eliminate_zeros()
        mat.sort_indices()
    return SubspaceHamiltonian(basis, mat)


def build_xxz(n: int, delta: float) -> tuple[PauliHamiltonian, SubspaceBasis]:
    """Periodic XXZ chain ``Σ_j X_jX_{j+1} + Y_jY_{j+1} + Δ Z_jZ_{j+1}`` at half filling."""
    if n % 2 or not 4 <= n <= 16:
        raise ValueError(f"the XXZ chain needs an even n in [4, 16], got {n}")
    terms = []
    for j in range(n):
        nxt = (j + 1) % n
        for op, coeff in (("X", 1.0), ("Y", 1.0), ("Z", float(delta))):
            word = ["I"] * n
            word[j] = word[nxt] = op
            terms.append((coeff, "".join(word)))
    return PauliHamiltonian.from_terms(n, terms), enumerate_basis(n, "hw", n // 2)


def build_tfim(n: int, h: float, k: int) -> tuple[PauliHamiltonian, SubspaceBasis]:
    """Periodic transverse-field Ising chain ``-Σ_j Z_jZ_{j+1} + h X_j`` on weights ``<= k``."""
    if n < 2:
        raise ValueError(f"the TFIM chain needs n >= 2, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must satisfy 0 <= k <= n = {n}, got {k}")
    terms = []
    for j in range(n):
        word = ["I"] * n
        word[j] = word[(j + 1) % n] = "Z"
        terms.append((-1.0, "".join(word)))
    for j in range(n):
        word = ["I"] * n
        word[j] = "X"
        terms.append((-float(h), "".join(word)))
    return PauliHamiltonian.from_terms(n, terms), enumerate_basis(n, "hw_le", k)


def hartree_label(n: int, k: int) -> str:
    return "1" * k + "0" * (n - k)


def warm_start_state(n: int, k: int, alpha: float = 0.9) -> np.ndarray:
    """Warm start in the fixed-HW(k) basis: weight ``α`` on the Hartree label, the rest spread evenly."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    basis = enumerate_basis(n, "hw", k)
    d = basis.dim
    if d == 1:
        raise ValueError(f"the HW({k}) subspace of {n} qubits has a single state; no remainder to weight")
    x = np.full(d, math.sqrt((1.0 - alpha) / (d - 1)))
    x[basis.index_of(hartree_label(n, k))] = math.sqrt(alpha)
    return x


def _default_degeneracy_tol(e0: float) -> float:
    return 1e-9 * max(1.0, abs(e0))


def _lanczos_ground(M, degeneracy_tol, max_iter, tol, block):
    d = M.shape[0]
    nev = min(block, d - 2)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(d)
    while True:
        try:
            vals, vecs = spla.eigsh(M, k=nev, which="SA", v0=v0, maxiter=max_iter, tol=tol)
        except spla.ArpackNoConvergence as exc:
            if exc.eigenvectors.size:
                res = np.linalg.norm(M @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues, axis=0)
                worst = float(res.max())
            else:
                worst = float("inf")
            raise ConvergenceError(
                f"Lanczos did not converge in {max_iter} iterations ({len(exc.eigenvalues)} of {nev} eigenpairs)",
                worst,
            ) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        e0 = float(vals[0])
        tol_e = _default_degeneracy_tol(e0) if degeneracy_tol is None else degeneracy_tol
        keep = vals <= e0 + tol_e
        if not keep[-1] or nev >= d - 2:
            break
        nev = min(2 * nev, d - 2)
    res = np.linalg.norm(M @ vecs[:, keep] - vecs[:, keep] * vals[keep], axis=0)
    if res.max() > 1e-8 * max(1.0, abs(e0)):
        raise ConvergenceError("Lanczos ground vectors failed the residual check", float(res.max()))
    q, _ = np.linalg.qr(vecs[:, keep])
    return e0, q


def exact_ground(H, degeneracy_tol: float | None = None, method: str = "auto",
                 max_iter: int = 5000, tol: float = 1e-13, block: int = 6):
    """Ground energy and an orthonormal basis of the ground eigenspace.

    ``method`` is ``"dense"`` (LAPACK symmetric solver), ``"lanczos"``
    (implicitly restarted Lanczos on the sparse operator) or ``"auto"``,
    which picks dense up to ``DENSE_MAX_DIM``. Every eigenvector with
    eigenvalue ``<= E0 + degeneracy_tol`` is returned; the default tolerance
    is ``1e-9 · max(1, |E0|)``.
    """
    M = getattr(H, "matrix", H)
    d = M.shape[0]
    if method == "auto":
        method = "dense" if d <= DENSE_MAX_DIM else "lanczos"
    if method == "lanczos" and d <= 3:
        method = "dense"
    if method == "dense":
        A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        vals, vecs = np.linalg.eigh(A)
        e0 = float(vals[0])
        tol_e = _default_degeneracy_tol(e0) if degeneracy_tol is None else degeneracy_tol
        keep = vals <= e0 + tol_e
        ground = vecs[:, keep]
    elif method == "lanczos":
        e0, ground = _lanczos_ground(sp.csr_matrix(M), degeneracy_tol, max_iter, tol, block)
    else:
        raise ValueError(f"unknown method {method!r}")
    return e0, [np.ascontiguousarray(ground[:, i]) for i in range(ground.shape[1])]


def fidelity_to_ground(x, ground_basis) -> float:
    """Overlap ``Σ_j <x, α_j>²`` of ``x`` with an orthonormal ground eigenspace."""
    x = np.asarray(x, dtype=float)
    total = sum(float(np.dot(x, g)) ** 2 for g in ground_basis)
    return min(1.0, max(0.0, total))


# --- symmetry reduction -----------------------------------------------------

def _rotate(codes: np.ndarray, n: int) -> np.ndarray:
    # qubit j -> qubit j+1 (mod n): shift every bit one place towards the LSB
    mask = (1 << n) - 1
    return ((codes >> 1) | ((codes & 1) << (n - 1))) & mask


def _reflect(codes: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(codes)
    for q in range(n):
        out |= ((codes >> q) & 1) << (n - 1 - q)
    return out


def _permutation(basis: SubspaceBasis, image: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(basis.codes, image)
    pos = np.minimum(pos, basis.dim - 1)
    if np.any(basis.codes[pos] != image):
        raise NotInvariant("the basis is not closed under the chain symmetries")
    return pos


def _check_invariant(M, perm: np.ndarray, what: str, tol: float) -> None:
    if sp.issparse(M):
        diff = M[perm][:, perm] - M
        err = abs(diff).max() if diff.nnz else 0.0
    else:
        err = float(np.max(np.abs(M[np.ix_(perm, perm)] - M)))
    if err > tol:
        raise NotInvariant(f"Hamiltonian is not invariant under {what} (max deviation {err:.3e})")


def symmetry_reduce(H: SubspaceHamiltonian, n: int, translation_sign: int = 1,
                    reflection_sign: int = 1, tol: float = 1e-12) -> SubspaceHamiltonian:
    """Restrict ``H`` to one symmetry sector of the cyclic chain group.

    The group is generated by the cyclic shift of qubits and the bit
    reversal. A sector is fixed by the sign picked up under one shift and
    under reflection; the default ``(+1, +1)`` is the fully symmetric sector
    where each orbit contributes its normalized uniform sum. Orbits whose
    projection vanishes in the chosen sector are dropped.
    """
    basis = H.basis
    if basis.kind != "hw" or basis.k * 2 != n or basis.n != n:
        raise ValueError("symmetry reduction expects the half-filling fixed-HW basis")
    if translation_sign not in (1, -1) or reflection_sign not in (1, -1):
        raise ValueError("sector signs must be +1 or -1")
    codes = basis.codes
    shift = _permutation(basis, _rotate(codes, n))
    flip = _permutation(basis, _reflect(codes, n))
    scale = tol * max(1.0, float(abs(H.matrix).max()))
    _check_invariant(H.matrix, shift, "cyclic translation", scale)
    _check_invariant(H.matrix, flip, "reflection", scale)

    d = basis.dim
    seen = np.zeros(d, dtype=bool)
    cols, reps = [], []
    for start in range(d):
        if seen[start]:
            continue
        vec: dict[int, float] = {}
        # walk T^a and T^a R, accumulating characters
        for refl, base in ((1.0, start), (float(reflection_sign), int(flip[start]))):
            idx = base
            weight = refl
            for _ in range(n):
                vec[idx] = vec.get(idx, 0.0) + weight
                seen[idx] = True
                idx = int(shift[idx])
                weight *= translation_sign
        members = {i: w for i, w in vec.items() if abs(w) > 1e-12}
        if not members:
            continue
        idx = np.fromiter(members, dtype=np.int64)
        w = np.fromiter(members.values(), dtype=float)
        cols.append((idx, w / np.linalg.norm(w)))
        reps.append(int(codes[min(members)]))
    r = len(cols)
    if r == 0:
        raise ValueError(f"sector ({translation_sign:+d}, {reflection_sign:+d}) is empty for this basis")
    rows_i = np.concatenate([c[0] for c in cols])
    cols_i = np.concatenate([np.full(c[0].size, j) for j, c in enumerate(cols)])
    vals = np.concatenate([c[1] for c in cols])
    V = sp.csr_matrix((vals, (rows_i, cols_i)), shape=(d, r))
    reduced = V.T @ (H.matrix @ V)
    reduced = np.asarray(reduced.toarray() if sp.issparse(reduced) else reduced)
    reduced = (reduced + reduced.T) * 0.5
    order = np.argsort(reps)
    reduced = reduced[np.ix_(order, order)]
    V = V[:, order]
    rep_basis = SubspaceBasis(n, np.asarray(reps, dtype=np.int64)[order], "explicit")
    return SubspaceHamiltonian(rep_basis, reduced, embedding=V.tocsr())


def ground_sector(H: SubspaceHamiltonian, n: int, tol: float = 1e-12):
    """The one-dimensional symmetry sector holding the ground energy.

    Returns ``(reduced, (translation_sign, reflection_sign))`` for the sector
    with the lowest reduced ground energy, preferring the symmetric sector on
    ties.
    """
    best = None
    for t, r in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        try:
            red = symmetry_reduce(H, n, t, r, tol)
        except NotInvariant:
            raise
        except ValueError:
            continue
        e0 = float(np.linalg.eigvalsh(red.dense())[0])
        if best is None or e0 < best[0] - 1e-12 * max(1.0, abs(e0)):
            best = (e0, red, (t, r))
    return best[1], best[2]


# --- file format -------------------------------------------------------------

def load_hamiltonian(path) -> tuple[PauliHamiltonian, SubspaceBasis]:
    """Read a Pauli-sum Hamiltonian and its subspace from JSON.

    Format: ``{"n": int, "terms": [{"coeff": float, "pauli": "XZYI..."}],
    "subspace": {"kind": "hw" | "hw_le" | "explicit", "k": int, "labels": [...]}}``.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read Hamiltonian file {path}: {exc}") from exc
    return hamiltonian_from_dict(raw)


def hamiltonian_from_dict(raw: dict) -> tuple[PauliHamiltonian, SubspaceBasis]:
    try:
        n = raw["n"]
        terms = raw["terms"]
        sub = raw.get("subspace", {"kind": "hw_le", "k": n})
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"Hamiltonian JSON is missing field {exc}") from exc
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError(f"'n' must be an integer, got {n!r}")
    parsed = []
    for t in terms:
        try:
            coeff, word = t["coeff"], t["pauli"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"term {t!r} needs 'coeff' and 'pauli'") from exc
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool) or not math.isfinite(coeff):
            raise ConfigError(f"coefficient {coeff!r} is not a finite number")
        if not isinstance(word, str) or word != word.upper():
            raise ConfigError(f"Pauli word {word!r} must be an uppercase string")
        parsed.append((float(coeff), word))
    try:
        h = PauliHamiltonian.from_terms(n, parsed)
        basis = enumerate_basis(n, sub.get("kind"), sub.get("k"), sub.get("labels"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return h, basis


def hamiltonian_to_dict(h: PauliHamiltonian, basis: SubspaceBasis) -> dict:
    sub: dict = {"kind": basis.kind}
    if basis.kind == "explicit":
        sub["labels"] = basis.labels
    else:
        sub["k"] = basis.k
    return {"n": h.n, "terms": [{"coeff": c, "pauli": w} for c, w in h.terms], "subspace": sub}


def save_hamiltonian(path, h: PauliHamiltonian, basis: SubspaceBasis) -> None:
    Path(path).write_text(json.dumps(hamiltonian_to_dict(h, basis), indent=2))
