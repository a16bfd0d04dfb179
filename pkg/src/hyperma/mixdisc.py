"""Mixed discriminants of hyperhermitian matrices.

det(A_1, ..., A_n) is the coefficient of lambda_1*...*lambda_n in the
Moore determinant of sum(lambda_i A_i), divided by n!.  It is evaluated
by inclusion-exclusion polarization over subset sums (2^n Moore
determinants), which is exact and cheap at the dimensions this package
targets (n <= 4).

The identity and inequality checks bundled here (Aleksandrov, the
signature of the bilinear form B, the rank-one/vector identity, and the
epsilon-weighted product inequality) are consumed by the CLI
``check-identities`` subcommand and the acceptance suite.

Index-order note: the vector identity builds the matrix M with entries
M_ij = U_in * conj(a_j) (the vector factor multiplies on the *right*,
matching the right H-module convention).  The left-multiplied variant
fails the identity on random non-commuting inputs at n >= 3; the order
was fixed numerically against direct evaluation of both sides.  With
the n!-normalized mixed discriminant used here, the identity carries
the linearization factor n on the left:
n * det(M + M*, U[n-1]) = 2 Re(conj(a_n)) det(U).
"""

from __future__ import annotations

import itertools
from math import comb, factorial

import numpy as np

from .hypermat import (
    HyperHermitianMatrix,
    QuatMatrix,
    _as_hyper,
    _as_quatmat,
    is_positive_definite,
    moore_det,
    moore_det_batch,
)
from .quaternion import Quaternion, qconj, qmul


def _stack(mats) -> np.ndarray:
    """Validate a matrix list and return components stacked as (m, n, n, 4)."""
    comps = []
    n = None
    for M in mats:
        A = _as_hyper(M)
        if n is None:
            n = A.n
        elif A.n != n:
            raise ValueError("all matrices in the list must share one dimension")
        comps.append(A.q)
    return np.stack(comps)


def mixed_discriminant(mats) -> float:
    """Mixed discriminant det(A_1, ..., A_n) by inclusion-exclusion.

    Requires exactly n matrices of dimension n; symmetric under any
    permutation of the arguments and linear in each slot.
    """
    stacked = _stack(mats)
    m, n = stacked.shape[0], stacked.shape[1]
    if m != n:
        raise ValueError(f"need exactly n={n} matrices, got {m}")
    total = 0.0
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for subset in itertools.combinations(range(n), size):
            total += sign * float(moore_det_batch(stacked[list(subset)].sum(axis=0)[None])[0])
    return total / factorial(n)


def mixed_with_repeats(X, A, k: int) -> float:
    """det(X, A[n-1]): mixed discriminant with A repeated k = n-1 times."""
    X = _as_hyper(X)
    A = _as_hyper(A)
    if X.n != A.n:
        raise ValueError("dimension mismatch between X and A")
    n = A.n
    if k != n - 1:
        raise ValueError(f"repeat count must be n-1 = {n - 1}, got {k}")
    return float(mixed_with_repeats_batch(X.q[None], A.q[None])[0])


def mixed_with_repeats_batch(Xq: np.ndarray, Aq: np.ndarray) -> np.ndarray:
    """Vectorized det(X, A[n-1]) over a batch of (..., n, n, 4) pairs.

    Polarizes only over the two distinct matrices: the 2^n subset sums
    collapse to determinants of x*X + j*A with binomial weights.
    """
    Xq = np.asarray(Xq, dtype=float)
    Aq = np.asarray(Aq, dtype=float)
    n = Aq.shape[-2]
    total = None
    for x in (0, 1):
        for j in range(n):
            if x == 0 and j == 0:
                continue  # empty subset: det of the zero matrix
            weight = comb(n - 1, j) * (-1) ** (n - x - j)
            dets = moore_det_batch(x * Xq + j * Aq)
            total = weight * dets if total is None else total + weight * dets
    return total / factorial(n)


# ----------------------------------------------------------------------
# Identities and inequalities
# ----------------------------------------------------------------------

def _scale(*vals) -> float:
    return 1.0 + max(abs(v) for v in vals)


def aleksandrov_check(mats, X, tol: float = 1e-9):
    """Aleksandrov inequality for mixed discriminants.

    For positive definite A_1..A_{n-1} and any hyperhermitian X:
    det(A_1,..,A_{n-1},X)^2 >= det(A_1,..,A_{n-1},A_{n-1}) *
    det(A_1,..,A_{n-2},X,X), with equality iff X is proportional to
    A_{n-1}.  Returns (lhs, rhs, holds).
    """
    mats = [_as_hyper(M) for M in mats]
    X = _as_hyper(X)
    for M in mats:
        if not is_positive_definite(M):
            raise ValueError("Aleksandrov inequality requires positive definite inputs")
    head, last = mats[:-1], mats[-1]
    val = mixed_discriminant(mats + [X])
    lhs = val * val
    rhs = mixed_discriminant(mats + [last]) * mixed_discriminant(head + [X, X])
    holds = lhs >= rhs - tol * _scale(lhs, rhs)
    return lhs, rhs, holds


def hyperhermitian_basis(n: int) -> list:
    """Canonical real basis of the n x n hyperhermitian space.

    E_ii (real diagonal units) plus, for i < j, the four matrices with
    unit e_a in slot (i, j) and conj(e_a) in (j, i); dimension 2n^2 - n.
    """
    basis = []
    for i in range(n):
        q = np.zeros((n, n, 4))
        q[i, i, 0] = 1.0
        basis.append(q)
    for i in range(n):
        for j in range(i + 1, n):
            for a in range(4):
                q = np.zeros((n, n, 4))
                q[i, j, a] = 1.0
                q[j, i, a] = 1.0 if a == 0 else -1.0
                basis.append(q)
    assert len(basis) == 2 * n * n - n
    return basis


def signature_of_B(mats, n: int | None = None, tol: float = 1e-9):
    """Sign counts (plus, minus, zero) of B(X, Y) = det(X, Y, A_1..A_{n-2}).

    ``mats`` holds the n-2 positive definite matrices; ``n`` must be
    given when the list is empty.  The Gram matrix is built over the
    canonical basis of the hyperhermitian space (dimension 2n^2 - n).
    """
    mats = [_as_hyper(M) for M in mats]
    if mats:
        n = mats[0].n
    elif n is None:
        raise ValueError("dimension n required when the matrix list is empty")
    if len(mats) != n - 2:
        raise ValueError(f"need n-2 = {n - 2} matrices, got {len(mats)}")
    for M in mats:
        if not is_positive_definite(M):
            raise ValueError("signature computation requires positive definite inputs")
    basis = hyperhermitian_basis(n)
    fixed = [M.q for M in mats]
    dim = len(basis)
    gram = np.empty((dim, dim))
    for p in range(dim):
        for q in range(p, dim):
            val = mixed_discriminant([basis[p], basis[q]] + fixed)
            gram[p, q] = gram[q, p] = val
    eigs = np.linalg.eigvalsh(gram)
    cut = tol * (1.0 + np.max(np.abs(eigs)))
    plus = int(np.sum(eigs > cut))
    minus = int(np.sum(eigs < -cut))
    zero = dim - plus - minus
    return plus, minus, zero


def vector_identity_check(a, U):
    """Vector identity n * det(M + M*, U[n-1]) = 2 Re(conj(a_n)) det(U).

    ``a`` is an n-vector of quaternions, U hyperhermitian; M has entries
    M_ij = U_in * conj(a_j) (see the module docstring for how the order
    and normalization were fixed).  Returns (lhs, rhs).
    """
    U = _as_hyper(U)
    n = U.n
    av = _vector_components(a)
    if av.shape != (n, 4):
        raise ValueError(f"vector length {av.shape[0]} does not match dimension {n}")
    # M_ij = u_{i, n} * conj(a_j)
    M = qmul(U.q[:, n - 1, :][:, None, :], qconj(av)[None, :, :])
    sym = M + qconj(np.swapaxes(M, 0, 1))
    lhs = n * float(mixed_with_repeats_batch(sym[None], U.q[None])[0])
    rhs = 2.0 * av[n - 1, 0] * moore_det(U)
    return lhs, rhs


def split_inequality_check(X, Y, A, eps: float, tol: float = 1e-9):
    """|det(XY*+YX*, A[n-1])| <= eps^2 det(XX*, A[n-1]) + eps^-2 det(YY*, A[n-1]).

    A must be positive definite and eps > 0.  Returns (lhs, bound, holds).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = _as_hyper(A)
    if not is_positive_definite(A):
        raise ValueError("the weight matrix must be positive definite")
    X = _as_quatmat(X)
    Y = _as_quatmat(Y)
    Ys = Y.conj_transpose()
    Xs = X.conj_transpose()
    cross = (X @ Ys) + (Y @ Xs)
    lhs = abs(mixed_with_repeats(HyperHermitianMatrix(cross.q, tol=1e-9), A, A.n - 1))
    dxx = mixed_with_repeats(HyperHermitianMatrix((X @ Xs).q, tol=1e-9), A, A.n - 1)
    dyy = mixed_with_repeats(HyperHermitianMatrix((Y @ Ys).q, tol=1e-9), A, A.n - 1)
    bound = eps ** 2 * dxx + eps ** -2 * dyy
    holds = lhs <= bound + tol * _scale(lhs, bound)
    return lhs, bound, holds


def _vector_components(a) -> np.ndarray:
    if isinstance(a, np.ndarray) and a.dtype == float and a.ndim == 2:
        return a
    vals = list(a)
    if vals and isinstance(vals[0], Quaternion):
        return np.array([v.to_array() for v in vals])
    return np.asarray(vals, dtype=float)


# ----------------------------------------------------------------------
# Batched identity suite (backs `hyperma check-identities`)
# ----------------------------------------------------------------------

def run_identity_suite(n: int, samples: int, seed: int) -> dict:
    """Random-sample all the identity/inequality checks at dimension n.

    Returns a report dict with pass/fail counts and worst residuals per
    identity; deterministic for a fixed seed.
    """
    from .hypermat import random_hyperhermitian, random_positive_definite, random_quat_matrix

    rng = np.random.default_rng(seed)
    report = {"n": n, "samples": samples, "seed": seed, "identities": {}}

    def record(name, failures, worst):
        report["identities"][name] = {
            "failures": failures, "worst_residual": worst, "passed": failures == 0}

    # Aleksandrov inequality
    fails, worst = 0, 0.0
    for _ in range(samples):
        mats = [random_positive_definite(n, rng) for _ in range(n - 1)]
        X = random_hyperhermitian(n, rng)
        lhs, rhs, holds = aleksandrov_check(mats, X)
        resid = max(0.0, rhs - lhs) / _scale(lhs, rhs)
        worst = max(worst, resid)
        fails += 0 if holds else 1
    record("aleksandrov", fails, worst)

    # equality branch at X = A_{n-1}
    fails, worst = 0, 0.0
    for _ in range(samples):
        mats = [random_positive_definite(n, rng) for _ in range(n - 1)]
        lhs, rhs, _ = aleksandrov_check(mats, mats[-1])
        resid = abs(lhs - rhs) / _scale(lhs, rhs)
        worst = max(worst, resid)
        fails += 0 if resid <= 1e-9 else 1
    record("aleksandrov_equality", fails, worst)

    # vector identity
    fails, worst = 0, 0.0
    for _ in range(samples):
        U = random_positive_definite(n, rng)
        a = rng.normal(size=(n, 4))
        lhs, rhs = vector_identity_check(a, U)
        resid = abs(lhs - rhs) / _scale(lhs, rhs)
        worst = max(worst, resid)
        fails += 0 if resid <= 1e-9 else 1
    record("vector_identity", fails, worst)

    # epsilon-weighted product inequality
    fails, worst = 0, 0.0
    for idx in range(samples):
        A = random_positive_definite(n, rng)
        X = random_quat_matrix(n, rng)
        Y = random_quat_matrix(n, rng)
        eps = (0.5, 1.0, 2.0)[idx % 3]
        lhs, bound, holds = split_inequality_check(X, Y, A, eps)
        resid = max(0.0, lhs - bound) / _scale(lhs, bound)
        worst = max(worst, resid)
        fails += 0 if holds else 1
    record("product_inequality", fails, worst)

    # positivity of mixed discriminants of PD matrices
    fails, worst = 0, 0.0
    for _ in range(samples):
        mats = [random_positive_definite(n, rng) for _ in range(n)]
        val = mixed_discriminant(mats)
        worst = min(worst, val)
        fails += 0 if val > 0 else 1
    report["identities"]["pd_positivity"] = {
        "failures": fails, "worst_residual": -min(worst, 0.0), "passed": fails == 0}

    # signature of B (single deterministic instance; expensive for large n)
    if n >= 2:
        rng_sig = np.random.default_rng(seed + 1)
        mats = [random_positive_definite(n, rng_sig) for _ in range(n - 2)]
        plus, minus, zero = signature_of_B(mats, n=n)
        expected = (1, 2 * n * n - n - 1, 0)
        report["identities"]["signature"] = {
            "value": [plus, minus, zero], "expected": list(expected),
            "failures": 0 if (plus, minus, zero) == expected else 1,
            "passed": (plus, minus, zero) == expected}

    report["total_failures"] = sum(v["failures"] for v in report["identities"].values())
    report["passed"] = report["total_failures"] == 0
    return report
