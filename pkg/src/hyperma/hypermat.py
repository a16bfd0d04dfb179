"""Quaternion matrices, hyperhermitian structure, and Moore determinants.

Matrices are stored as numpy arrays of shape (n, n, 4), the last axis
holding quaternion components [t, x, y, z].  The Moore determinant is
computed by the signed permutation sum over normalized cycle
decompositions (primary algorithm, n <= MOORE_EXPANSION_CUTOFF) or, for
larger n, as the product of eigenvalues obtained from the complex
adjoint embedding.  The two routes are checked against each other in the
test suite.
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache

import numpy as np

from .quaternion import Quaternion, qconj, qmul, qscalar

#: Largest dimension at which the permutation-sum formula is used
#: directly (8! = 40320 terms); beyond this the determinant falls back
#: to the eigenvalue product.
MOORE_EXPANSION_CUTOFF = 8

HERMITIAN_TOL = 1e-12
IMAG_RESIDUE_TOL = 1e-10
EIG_PAIRING_TOL = 1e-8
MINOR_BOUNDARY_TOL = 1e-10


class NonHyperHermitianError(ValueError):
    pass


class ImagResidueError(ArithmeticError):
    """The imaginary part of a should-be-real result exceeded tolerance."""


class QuatMatrix:
    """A square matrix of quaternions."""

    def __init__(self, entries):
        q = _coerce_entries(entries)
        if q.ndim != 3 or q.shape[0] != q.shape[1] or q.shape[2] != 4:
            raise ValueError(f"expected an (n, n, 4) component array, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("matrix entries must be finite")
        self.q = q
        self.n = q.shape[0]

    def entry(self, i: int, j: int) -> Quaternion:
        return Quaternion.from_array(self.q[i, j])

    def conj_transpose(self) -> "QuatMatrix":
        return QuatMatrix(qconj(np.swapaxes(self.q, 0, 1)))

    def is_hyperhermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        diff = self.q - qconj(np.swapaxes(self.q, 0, 1))
        return bool(np.max(np.abs(diff)) <= tol)

    def __add__(self, other):
        return type(self)(self.q + _matq(other))

    def __sub__(self, other):
        return type(self)(self.q - _matq(other))

    def __mul__(self, scalar):
        return type(self)(self.q * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(-self.q)

    def __matmul__(self, other) -> "QuatMatrix":
        b = _matq(other)
        if b.shape[0] != self.n:
            raise ValueError("dimension mismatch in matrix product")
        prod = qmul(self.q[:, :, None, :], b[None, :, :, :]).sum(axis=1)
        return QuatMatrix(prod)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"

    # -- JSON ------------------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.n, "entries": self.q.tolist()}

    @classmethod
    def from_json(cls, data) -> "QuatMatrix":
        if isinstance(data, str):
            data = json.loads(data)
        entries = np.asarray(data["entries"], dtype=float)
        if entries.shape != (data["n"], data["n"], 4):
            raise ValueError("entries shape does not match declared dimension")
        return cls(entries)

    @classmethod
    def identity(cls, n: int) -> "QuatMatrix":
        q = np.zeros((n, n, 4))
        q[np.arange(n), np.arange(n), 0] = 1.0
        return cls(q)

    @classmethod
    def diag(cls, values) -> "QuatMatrix":
        values = np.asarray(values, dtype=float)
        n = len(values)
        q = np.zeros((n, n, 4))
        q[np.arange(n), np.arange(n), 0] = values
        return cls(q)


class HyperHermitianMatrix(QuatMatrix):
    """Quaternionic matrix with A* = A (validated entrywise on construction)."""

    def __init__(self, entries, tol: float = HERMITIAN_TOL):
        super().__init__(entries)
        residue = np.max(np.abs(self.q - qconj(np.swapaxes(self.q, 0, 1))))
        if residue > tol:
            raise NonHyperHermitianError(
                f"matrix is not hyperhermitian (residue {residue:.3e} > {tol:.1e})")
        # remove the (tiny) asymmetry so invariants hold exactly downstream
        self.q = 0.5 * (self.q + qconj(np.swapaxes(self.q, 0, 1)))

    def leading_minor(self, k: int) -> "HyperHermitianMatrix":
        return HyperHermitianMatrix(self.q[:k, :k])


def _coerce_entries(entries) -> np.ndarray:
    if isinstance(entries, QuatMatrix):
        return entries.q.copy()
    if isinstance(entries, np.ndarray) and entries.dtype == float:
        return entries.astype(float, copy=True)
    arr = np.asarray(entries, dtype=object)
    if arr.ndim == 2 and arr.size and isinstance(arr.flat[0], Quaternion):
        out = np.empty(arr.shape + (4,), dtype=float)
        for idx, val in np.ndenumerate(arr):
            out[idx] = Quaternion.from_array(val.to_array()).to_array() \
                if isinstance(val, Quaternion) else Quaternion(float(val)).to_array()
        return out
    arr = np.asarray(entries, dtype=float)
    if arr.ndim == 2:
        # real matrix: embed entrywise
        return qscalar(arr)
    return arr


def _matq(other) -> np.ndarray:
    if isinstance(other, QuatMatrix):
        return other.q
    return _coerce_entries(other)


def conj_transpose(C: QuatMatrix) -> QuatMatrix:
    """(C*)_{ij} = conj(C_{ji})."""
    return _as_quatmat(C).conj_transpose()


def _as_quatmat(M) -> QuatMatrix:
    return M if isinstance(M, QuatMatrix) else QuatMatrix(M)


def _as_hyper(A) -> HyperHermitianMatrix:
    return A if isinstance(A, HyperHermitianMatrix) else HyperHermitianMatrix(_matq(A))


def congruence(A, C) -> HyperHermitianMatrix:
    """C* A C, which is hyperhermitian whenever A is."""
    A = _as_hyper(A)
    C = _as_quatmat(C)
    if A.n != C.n:
        raise ValueError(f"dimension mismatch: A is {A.n}x{A.n}, C is {C.n}x{C.n}")
    prod = C.conj_transpose() @ A @ C
    return HyperHermitianMatrix(prod.q, tol=1e-9 * (1.0 + np.max(np.abs(prod.q))))


# ----------------------------------------------------------------------
# Moore determinant via the normalized-cycle permutation sum
# ----------------------------------------------------------------------

def canonical_cycles(sigma) -> list:
    """Disjoint-cycle decomposition in the normalized order.

    Each cycle is rotated so it starts with its smallest element, fixed
    points appear as 1-cycles, and the cycles are sorted so that their
    leading elements descend.  ``sigma`` is a sequence of images, either
    0-based or 1-based; labels are preserved in the output.
    """
    sigma = list(sigma)
    n = len(sigma)
    if n == 0:
        return []
    base = min(sigma)
    if base not in (0, 1) or sorted(sigma) != list(range(base, base + n)):
        raise ValueError(f"{sigma!r} is not a permutation of {{{base}..{base + n - 1}}}")
    images = [s - base for s in sigma]
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        cur = images[start]
        while cur != start:
            cyc.append(cur)
            seen[cur] = True
            cur = images[cur]
        # rotate so the smallest element leads
        m = cyc.index(min(cyc))
        cyc = cyc[m:] + cyc[:m]
        cycles.append(tuple(v + base for v in cyc))
    cycles.sort(key=lambda c: c[0], reverse=True)
    return cycles


@lru_cache(maxsize=16)
def _moore_terms(n: int):
    """Precompute (sign, index path) for every permutation of {0..n-1}.

    The path lists the (row, col) indices whose entries are multiplied
    left-to-right: a_{k11 k12} ... a_{k1j k11} a_{k21 k22} ... for the
    normalized cycle order.
    """
    terms = []
    for perm in itertools.permutations(range(n)):
        cycles = canonical_cycles(perm)
        sign = -1 if (n - len(cycles)) % 2 else 1
        path = []
        for cyc in cycles:
            for a in range(len(cyc)):
                path.append((cyc[a], cyc[(a + 1) % len(cyc)]))
        terms.append((sign, tuple(path)))
    return tuple(terms)


def moore_det_batch(entries: np.ndarray, imag_tol: float = IMAG_RESIDUE_TOL) -> np.ndarray:
    """Moore determinant of a batch of hyperhermitian matrices.

    ``entries`` has shape (..., n, n, 4).  Returns the real values and
    raises :class:`ImagResidueError` if the imaginary residue of the
    permutation sum exceeds ``imag_tol`` relative to 1 + |result|.
    """
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[-2]
    if entries.shape[-3] != n or entries.shape[-1] != 4:
        raise ValueError(f"expected (..., n, n, 4) components, got {entries.shape}")
    batch = entries.shape[:-3]
    if n > MOORE_EXPANSION_CUTOFF:
        return np.prod(eigenvalues_batch(entries), axis=-1)
    total = np.zeros(batch + (4,), dtype=float)
    for sign, path in _moore_terms(n):
        acc = entries[..., path[0][0], path[0][1], :]
        for (i, j) in path[1:]:
            acc = qmul(acc, entries[..., i, j, :])
        total = total + sign * acc
    residue = np.sqrt(np.sum(total[..., 1:] ** 2, axis=-1))
    bound = imag_tol * (1.0 + np.abs(total[..., 0]))
    if np.any(residue > bound):
        raise ImagResidueError(
            f"imaginary residue {np.max(residue):.3e} exceeds tolerance; "
            "input is likely not hyperhermitian")
    return total[..., 0]


def moore_det(A, imag_tol: float = IMAG_RESIDUE_TOL) -> float:
    """Moore determinant of a hyperhermitian matrix (a real number)."""
    A = _as_hyper(A)
    return float(moore_det_batch(A.q[None], imag_tol=imag_tol)[0])


# ----------------------------------------------------------------------
# Complex adjoint embedding and eigenvalues
# ----------------------------------------------------------------------

def complex_adjoint(entries: np.ndarray) -> np.ndarray:
    """Map (..., n, n, 4) quaternion matrices to (..., 2n, 2n) complex ones.

    Each entry a = alpha + beta*j with alpha = t + x*i, beta = y + z*i
    goes to the block pattern [[alpha, beta], [-conj(beta), conj(alpha)]];
    hyperhermitian inputs map to Hermitian outputs.
    """
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[-2]
    alpha = entries[..., 0] + 1j * entries[..., 1]
    beta = entries[..., 2] + 1j * entries[..., 3]
    out = np.empty(entries.shape[:-3] + (2 * n, 2 * n), dtype=complex)
    out[..., :n, :n] = alpha
    out[..., :n, n:] = beta
    out[..., n:, :n] = -np.conj(beta)
    out[..., n:, n:] = np.conj(alpha)
    return out


def eigenvalues_batch(entries: np.ndarray,
                      pairing_tol: float = EIG_PAIRING_TOL) -> np.ndarray:
    """Sorted real eigenvalues (..., n) via the complex adjoint embedding.

    The embedding's 2n eigenvalues come in nearest pairs; a pairing gap
    beyond tolerance signals a broken embedding (or non-hyperhermitian
    input) and raises.
    """
    emb = complex_adjoint(entries)
    lam = np.linalg.eigvalsh(emb)  # ascending
    a = lam[..., 0::2]
    b = lam[..., 1::2]
    gap = np.abs(a - b)
    scale = 1.0 + np.max(np.abs(lam), axis=-1, keepdims=True)
    if np.any(gap > pairing_tol * scale):
        raise ArithmeticError(
            f"eigenvalue pairing failure (max gap {np.max(gap):.3e}); "
            "input is likely not hyperhermitian")
    return 0.5 * (a + b)


def eigenvalues(A) -> np.ndarray:
    """The n real eigenvalues of a hyperhermitian matrix, ascending."""
    A = _as_hyper(A)
    return eigenvalues_batch(A.q[None])[0]


def is_positive_definite(A) -> bool:
    """Sylvester criterion: all leading principal Moore minors positive.

    Minors with magnitude below 1e-10 count as an indefinite boundary
    and yield False.
    """
    A = _as_hyper(A)
    for k in range(1, A.n + 1):
        minor = moore_det(A.leading_minor(k))
        if minor < MINOR_BOUNDARY_TOL:
            return False
    return True


def quadratic_form(A, xi, imag_tol: float = IMAG_RESIDUE_TOL) -> float:
    """xi* A xi = sum conj(xi_i) a_ij xi_j, a real number."""
    A = _as_hyper(A)
    xi = _coerce_vector(xi)
    if xi.shape != (A.n, 4):
        raise ValueError(f"vector shape {xi.shape} does not match dimension {A.n}")
    acc = qmul(qconj(xi)[:, None, :], qmul(A.q, xi[None, :, :])).sum(axis=(0, 1))
    residue = np.sqrt(np.sum(acc[1:] ** 2))
    if residue > imag_tol * (1.0 + abs(acc[0])):
        raise ImagResidueError(f"imaginary residue {residue:.3e} in quadratic form")
    return float(acc[0])


def _coerce_vector(xi) -> np.ndarray:
    if isinstance(xi, np.ndarray) and xi.dtype == float:
        return xi
    xi = list(xi)
    if xi and isinstance(xi[0], Quaternion):
        return np.array([v.to_array() for v in xi])
    return np.asarray(xi, dtype=float)


# ----------------------------------------------------------------------
# Random samplers used across the test and check suites
# ----------------------------------------------------------------------

def random_quat_matrix(n: int, rng: np.random.Generator, scale: float = 1.0) -> QuatMatrix:
    return QuatMatrix(rng.normal(scale=scale, size=(n, n, 4)))


def random_hyperhermitian(n: int, rng: np.random.Generator,
                          scale: float = 1.0) -> HyperHermitianMatrix:
    raw = rng.normal(scale=scale, size=(n, n, 4))
    sym = 0.5 * (raw + qconj(np.swapaxes(raw, 0, 1)))
    return HyperHermitianMatrix(sym)


def random_positive_definite(n: int, rng: np.random.Generator,
                             shift: float = 0.1) -> HyperHermitianMatrix:
    C = random_quat_matrix(n, rng)
    A = (C.conj_transpose() @ C).q
    A[np.arange(n), np.arange(n), 0] += shift
    return HyperHermitianMatrix(A, tol=1e-9 * (1.0 + np.max(np.abs(A))))
