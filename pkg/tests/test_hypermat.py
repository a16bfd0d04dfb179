import numpy as np
import pytest

from hyperma.hypermat import (HyperHermitianMatrix, ImagResidueError,
                              NonHyperHermitianError, QuatMatrix,
                              canonical_cycles, complex_adjoint, congruence,
                              conj_transpose, eigenvalues, is_positive_definite,
                              moore_det, moore_det_batch, quadratic_form,
                              random_hyperhermitian, random_positive_definite,
                              random_quat_matrix)
from hyperma.quaternion import Quaternion


def hmat(entries):
    return HyperHermitianMatrix(np.array(entries, dtype=float))


# [[1, j], [-j, 2]]
J2 = [[[1, 0, 0, 0], [0, 0, 1, 0]], [[0, 0, -1, 0], [2, 0, 0, 0]]]


def test_conj_transpose_examples():
    eye = QuatMatrix.identity(3)
    assert np.allclose(conj_transpose(eye).q, eye.q)
    # [[0, i], [j, 0]] -> [[0, -j], [-i, 0]]
    C = QuatMatrix(np.array([[[0, 0, 0, 0], [0, 1, 0, 0]],
                             [[0, 0, 1, 0], [0, 0, 0, 0]]], dtype=float))
    Cs = conj_transpose(C)
    assert Cs.entry(0, 1) == Quaternion(0, 0, -1, 0)
    assert Cs.entry(1, 0) == Quaternion(0, -1, 0, 0)


def test_cstar_c_hyperhermitian():
    rng = np.random.default_rng(1)
    for _ in range(100):
        C = random_quat_matrix(3, rng)
        assert (conj_transpose(C) @ C).is_hyperhermitian(tol=1e-10)


def test_congruence():
    rng = np.random.default_rng(2)
    A = random_hyperhermitian(3, rng)
    assert np.allclose(congruence(A, QuatMatrix.identity(3)).q, A.q)
    for n in (2, 3):
        for _ in range(50):
            A = random_hyperhermitian(n, rng)
            C = random_quat_matrix(n, rng)
            B = congruence(A, C)
            assert B.is_hyperhermitian(tol=1e-8)
            lhs = moore_det(B)
            rhs = moore_det(A) * moore_det(congruence(HyperHermitianMatrix(
                QuatMatrix.identity(n).q), C))
            assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


def test_canonical_cycles():
    assert canonical_cycles([1, 2, 3]) == [(3,), (2,), (1,)]
    assert canonical_cycles([2, 1]) == [(1, 2)]
    assert canonical_cycles([3, 2, 1]) == [(2,), (1, 3)]
    assert canonical_cycles([1, 0]) == [(0, 1)]  # 0-based accepted too
    with pytest.raises(ValueError):
        canonical_cycles([1, 1])


def test_moore_det_examples():
    assert moore_det(QuatMatrix.diag([2, 3])) == pytest.approx(6.0)
    assert moore_det(hmat(J2)) == pytest.approx(1.0)  # 1*2 - j*(-j) = 2 - 1
    # [[2, i], [-i, 1]]: complex Hermitian, usual determinant 2*1 - 1 = 1
    A = hmat([[[2, 0, 0, 0], [0, 1, 0, 0]], [[0, -1, 0, 0], [1, 0, 0, 0]]])
    assert moore_det(A) == pytest.approx(1.0)


def test_moore_det_2x2_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = random_hyperhermitian(2, rng)
        expected = A.q[0, 0, 0] * A.q[1, 1, 0] - np.sum(A.q[0, 1] ** 2)
        assert moore_det(A) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_complex_hermitian_agreement():
    # y = z = 0 entries: Moore determinant equals the complex determinant
    rng = np.random.default_rng(4)
    for n in (1, 2, 3, 4, 5):
        for _ in range(20):
            B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            H = B + B.conj().T
            q = np.zeros((n, n, 4))
            q[..., 0], q[..., 1] = H.real, H.imag
            d = moore_det(HyperHermitianMatrix(q))
            ref = np.linalg.det(H).real
            assert abs(d - ref) <= 1e-10 * (1 + abs(ref))


def test_adjoint_determinant_is_square():
    rng = np.random.default_rng(5)
    for _ in range(20):
        A = random_hyperhermitian(3, rng)
        ref = np.linalg.det(complex_adjoint(A.q)).real
        assert ref == pytest.approx(moore_det(A) ** 2, rel=1e-8)


def test_eigenvalues_examples():
    assert np.allclose(eigenvalues(HyperHermitianMatrix(QuatMatrix.identity(3).q)),
                       [1, 1, 1])
    assert np.allclose(eigenvalues(QuatMatrix.diag([-1, 5])), [-1, 5])
    lam = eigenvalues(hmat(J2))  # roots of x^2 - 3x + 1
    assert np.sum(lam) == pytest.approx(3.0)
    assert np.prod(lam) == pytest.approx(1.0)


def test_eigenvalue_product_is_moore_det():
    rng = np.random.default_rng(6)
    for n in (2, 3, 4):
        for _ in range(30):
            A = random_hyperhermitian(n, rng)
            assert np.prod(eigenvalues(A)) == pytest.approx(
                moore_det(A), rel=1e-9, abs=1e-9)


def test_large_dimension_uses_eigenvalue_path():
    rng = np.random.default_rng(7)
    A = random_hyperhermitian(9, rng)  # beyond the expansion cutoff
    ref = np.linalg.det(complex_adjoint(A.q)).real
    d = moore_det(A)
    assert d ** 2 == pytest.approx(ref, rel=1e-7)


def test_positive_definite():
    assert is_positive_definite(QuatMatrix.identity(3))
    assert is_positive_definite(hmat(J2))  # minors 1 and 1
    assert not is_positive_definite(QuatMatrix.diag([1, -1]))
    rng = np.random.default_rng(8)
    for _ in range(50):
        A = random_positive_definite(3, rng)
        assert is_positive_definite(A)
        assert np.all(eigenvalues(A) > 0)


def test_sylvester_matches_eigenvalues():
    rng = np.random.default_rng(9)
    for _ in range(200):
        A = random_hyperhermitian(3, rng)
        lam = eigenvalues(A)
        if np.min(np.abs(lam)) < 1e-8:
            continue  # tie band
        assert is_positive_definite(A) == bool(np.all(lam > 0))


def test_quadratic_form():
    rng = np.random.default_rng(10)
    xi = rng.normal(size=(3, 4))
    eye = HyperHermitianMatrix(QuatMatrix.identity(3).q)
    assert quadratic_form(eye, xi) == pytest.approx(np.sum(xi ** 2))
    assert quadratic_form(eye, np.zeros((3, 4))) == 0.0
    disagreements = 0
    for _ in range(1000):
        A = random_hyperhermitian(2, rng)
        v = rng.normal(size=(2, 4))
        val = quadratic_form(A, v)
        if is_positive_definite(A) and val <= 0 and abs(val) > 1e-8:
            disagreements += 1
    assert disagreements == 0


def test_hyperhermitian_validation():
    bad = np.zeros((2, 2, 4))
    bad[0, 1, 1] = 1.0
    bad[1, 0, 1] = 1.0  # should be -1 for hyperhermitian
    with pytest.raises(NonHyperHermitianError):
        HyperHermitianMatrix(bad)


def test_imag_residue_canary():
    bad = np.zeros((2, 2, 4))
    bad[0, 0, 0] = bad[1, 1, 0] = 1.0
    bad[0, 1, 1] = 1.0  # i
    bad[1, 0, 2] = 1.0  # j: the off-diagonal product i*j = k is imaginary
    with pytest.raises(ImagResidueError):
        moore_det_batch(bad[None])


def test_json_round_trip():
    rng = np.random.default_rng(11)
    A = random_hyperhermitian(3, rng)
    B = HyperHermitianMatrix.from_json(A.to_json())
    assert np.allclose(A.q, B.q)
    C = random_quat_matrix(2, rng)
    D = QuatMatrix.from_json(C.to_json())
    assert np.allclose(C.q, D.q)
