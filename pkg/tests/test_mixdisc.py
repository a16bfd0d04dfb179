import itertools

import numpy as np
import pytest

from hyperma.hypermat import (HyperHermitianMatrix, QuatMatrix, moore_det,
                              random_hyperhermitian, random_positive_definite,
                              random_quat_matrix)
from hyperma.mixdisc import (aleksandrov_check, vector_identity_check, split_inequality_check,
                             hyperhermitian_basis, mixed_discriminant,
                             mixed_with_repeats, run_identity_suite,
                             signature_of_B)


def eye(n):
    return HyperHermitianMatrix(QuatMatrix.identity(n).q)


def test_examples():
    A = random_hyperhermitian(2, np.random.default_rng(0))
    assert mixed_discriminant([A, A]) == pytest.approx(moore_det(A), rel=1e-10)
    assert mixed_discriminant([eye(3)] * 3) == pytest.approx(1.0)
    assert mixed_discriminant([QuatMatrix.diag([1, 2]),
                               QuatMatrix.diag([3, 4])]) == pytest.approx(5.0)


def test_symmetry_exact():
    rng = np.random.default_rng(1)
    mats = [random_hyperhermitian(3, rng) for _ in range(3)]
    vals = [mixed_discriminant([mats[p] for p in perm])
            for perm in itertools.permutations(range(3))]
    assert max(vals) - min(vals) <= 1e-12 * (1 + abs(vals[0]))


def test_multilinearity():
    rng = np.random.default_rng(2)
    A, B, X, Y = (random_hyperhermitian(3, rng) for _ in range(4))
    lhs = mixed_discriminant([HyperHermitianMatrix(2 * X.q + Y.q), A, B])
    rhs = 2 * mixed_discriminant([X, A, B]) + mixed_discriminant([Y, A, B])
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))


def test_positivity_on_pd():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        for _ in range(30):
            mats = [random_positive_definite(n, rng) for _ in range(n)]
            assert mixed_discriminant(mats) > 0


def test_mixed_with_repeats():
    rng = np.random.default_rng(4)
    n = 3
    A = random_hyperhermitian(n, rng)
    assert mixed_with_repeats(A, A, n - 1) == pytest.approx(moore_det(A), rel=1e-10)
    # diagonal closed form: det(I, diag(a)[n-1]) = (1/n) sum_i prod_{j != i} a_j
    a = np.array([2.0, 3.0, 5.0])
    expected = (3 * 5 + 2 * 5 + 2 * 3) / 3
    assert mixed_with_repeats(eye(n), QuatMatrix.diag(a), n - 1) == \
        pytest.approx(expected, rel=1e-12)
    # linearity in the distinguished slot
    X, Y = random_hyperhermitian(n, rng), random_hyperhermitian(n, rng)
    lhs = mixed_with_repeats(HyperHermitianMatrix(2 * X.q + Y.q), A, n - 1)
    rhs = 2 * mixed_with_repeats(X, A, n - 1) + mixed_with_repeats(Y, A, n - 1)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))
    with pytest.raises(ValueError):
        mixed_with_repeats(X, A, n)


def test_derivative_identity():
    # d/de det(A + e X) at 0 equals n * det(X, A[n-1])
    rng = np.random.default_rng(5)
    for n in (2, 3):
        A = random_positive_definite(n, rng)
        X = random_hyperhermitian(n, rng)
        eps = 1e-6
        fd = (moore_det(HyperHermitianMatrix(A.q + eps * X.q))
              - moore_det(HyperHermitianMatrix(A.q - eps * X.q))) / (2 * eps)
        assert fd == pytest.approx(n * mixed_with_repeats(X, A, n - 1),
                                   rel=1e-7, abs=1e-7)


def test_aleksandrov():
    rng = np.random.default_rng(6)
    for n in (2, 3):
        for _ in range(40):
            mats = [random_positive_definite(n, rng) for _ in range(n - 1)]
            X = random_hyperhermitian(n, rng)
            lhs, rhs, holds = aleksandrov_check(mats, X)
            assert holds
        # equality branch: X = A_{n-1}
        lhs, rhs, holds = aleksandrov_check(mats, mats[-1])
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    with pytest.raises(ValueError):
        aleksandrov_check([QuatMatrix.diag([1, -1])], eye(2))


def test_signature():
    assert signature_of_B([], n=2) == (1, 5, 0)
    assert signature_of_B([eye(3)]) == (1, 14, 0)
    assert signature_of_B([HyperHermitianMatrix(2 * eye(3).q)]) == (1, 14, 0)
    assert len(hyperhermitian_basis(3)) == 15


def test_vector_identity():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        U = random_positive_definite(n, rng)
        # a = (0, ..., 0, 1): lhs = 2 det(U)
        a = np.zeros((n, 4))
        a[n - 1, 0] = 1.0
        lhs, rhs = vector_identity_check(a, U)
        assert lhs == pytest.approx(2 * moore_det(U), rel=1e-9)
        # a_n purely imaginary: rhs = 0
        a2 = rng.normal(size=(n, 4))
        a2[n - 1, 0] = 0.0
        lhs, rhs = vector_identity_check(a2, U)
        assert rhs == 0.0
        assert abs(lhs) <= 1e-9 * (1 + abs(moore_det(U)))
        for _ in range(50):
            a3 = rng.normal(size=(n, 4))
            U3 = random_positive_definite(n, rng)
            lhs, rhs = vector_identity_check(a3, U3)
            assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs) + abs(rhs))


def test_product_inequality():
    rng = np.random.default_rng(8)
    for n in (2, 3):
        A = random_positive_definite(n, rng)
        X = random_quat_matrix(n, rng)
        lhs, bound, holds = split_inequality_check(X, X, A, 1.0)
        assert lhs == pytest.approx(bound, rel=1e-9)
        Z = QuatMatrix(np.zeros((n, n, 4)))
        lhs, bound, holds = split_inequality_check(X, Z, A, 0.5)
        assert lhs == pytest.approx(0.0, abs=1e-12) and holds
        for eps in (0.5, 1.0, 2.0):
            for _ in range(20):
                X = random_quat_matrix(n, rng)
                Y = random_quat_matrix(n, rng)
                assert split_inequality_check(X, Y, A, eps)[2]
    with pytest.raises(ValueError):
        split_inequality_check(X, Y, A, -1.0)


def test_identity_suite_passes():
    report = run_identity_suite(n=2, samples=40, seed=123)
    assert report["passed"]
    assert report["total_failures"] == 0
    # determinism
    again = run_identity_suite(n=2, samples=40, seed=123)
    assert report == again
