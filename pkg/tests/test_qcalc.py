import numpy as np
import pytest

from hyperma.analytic import (AbsSq, Affine, ExpAbsSq, QuadraticForm,
                              RadialPow4, Scale, Sum)
from hyperma.hypermat import random_hyperhermitian
from hyperma.qcalc import (GridFunction, dirac_weyl, dirac_weyl_bar,
                           hyper_hessian, hyper_hessians,
                           hyper_hessians_from_real, is_psh_at, is_spsh_region,
                           ma_operator, ma_operator_batch, min_eigenvalue)
from hyperma.quaternion import Quaternion, qconj


def analytic_kinds_n1():
    rng = np.random.default_rng(0)
    A = random_hyperhermitian(1, rng)
    A.q[0, 0, 0] += 2.0  # keep it nondegenerate
    return [
        AbsSq(1),
        RadialPow4(1),
        ExpAbsSq(1, lam=0.3),
        Affine(1, coeffs=np.array([1.0, -2.0, 0.5, 3.0]), const=0.7),
        QuadraticForm(A),
        Sum([AbsSq(1), Scale(RadialPow4(1), 0.25)]),
    ]


def test_dirac_weyl_examples():
    t1 = Affine(1, coeffs=np.array([1.0, 0, 0, 0]))
    q = np.array([0.3, -0.2, 0.9, 0.4])
    assert dirac_weyl_bar(t1, q).isclose(Quaternion(1), abs_tol=1e-12)
    assert dirac_weyl(t1, q).isclose(Quaternion(1), abs_tol=1e-12)
    # |q|^2: d/dq_bar -> 2q, d/dq -> 2 conj(q)
    u = AbsSq(1)
    assert np.allclose(dirac_weyl_bar(u, q).to_array(), 2 * q, atol=1e-12)
    assert np.allclose(dirac_weyl(u, q).to_array(), 2 * qconj(q), atol=1e-12)


def test_operator_commutativity():
    rng = np.random.default_rng(1)
    for fn in analytic_kinds_n1():
        for _ in range(5):
            q = rng.normal(size=4) * 0.5

            def bar_then_plain(p, f=fn):
                return dirac_weyl_bar(f, p)

            def plain_then_bar(p, f=fn):
                return dirac_weyl(f, p)

            a = dirac_weyl(bar_then_plain, q).to_array()
            b = dirac_weyl_bar(plain_then_bar, q).to_array()
            assert np.max(np.abs(a - b)) <= 1e-8 * (1 + np.max(np.abs(a)))


def test_hyper_hessian_examples():
    q = np.array([0.1, 0.2, -0.3, 0.4])
    H = hyper_hessian(AbsSq(1), q)
    assert np.allclose(H.q[0, 0], [8, 0, 0, 0], atol=1e-12)
    # n = 2 sum of squared norms -> diag(8, 8)
    H2 = hyper_hessian(AbsSq(2), np.zeros(8))
    expect = np.zeros((2, 2, 4))
    expect[0, 0, 0] = expect[1, 1, 0] = 8.0
    assert np.allclose(H2.q, expect, atol=1e-10)
    # affine -> zero matrix
    aff = Affine(2, coeffs=np.arange(8, dtype=float))
    assert np.allclose(hyper_hessian(aff, np.ones(8)).q, 0.0, atol=1e-12)


def test_quadratic_form_convention():
    # Hessian of xi* A xi is 8 * conj(A) (= 8 * A-transpose), exactly
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        A = random_hyperhermitian(n, rng)
        H = hyper_hessian(QuadraticForm(A), rng.normal(size=4 * n))
        assert np.allclose(H.q, 8.0 * qconj(A.q), atol=1e-10)


def test_ma_operator_examples():
    assert ma_operator(AbsSq(2), np.zeros(8)) == pytest.approx(64.0)
    rng = np.random.default_rng(3)
    q = rng.normal(size=4)
    rho2 = float(np.sum(q ** 2))
    assert ma_operator(RadialPow4(1), q) == pytest.approx(24 * rho2, rel=1e-10)


def test_n1_ma_equals_laplacian():
    rng = np.random.default_rng(4)
    for fn in analytic_kinds_n1():
        pts = rng.normal(size=(20, 4)) * 0.5
        ma = ma_operator_batch(fn, pts)
        lap = np.trace(fn.real_hessians(pts), axis1=1, axis2=2)
        assert np.max(np.abs(ma - lap)) <= 1e-10 * (1 + np.max(np.abs(lap)))


def test_grid_convergence_second_order():
    fn = ExpAbsSq(1, lam=0.5)
    q = np.array([0.25, -0.25, 0.25, 0.25])
    exact = ma_operator(fn, q)
    errs = []
    for h in (0.1, 0.05):
        grid = GridFunction.sample(fn, q - 3 * h, (7, 7, 7, 7), h)
        errs.append(abs(ma_operator(grid, q) - exact))
    ratio = errs[0] / errs[1]
    assert 3.5 <= ratio <= 4.5


def test_psh_flags():
    q = np.array([0.5, 0, 0.1, -0.2])
    assert is_psh_at(AbsSq(1), q)
    assert not is_psh_at(Scale(AbsSq(1), -1.0), q)
    t1 = Affine(1, coeffs=np.array([1.0, 0, 0, 0]))
    assert is_psh_at(t1, q)
    pts = np.random.default_rng(5).normal(size=(10, 4))
    assert is_spsh_region(AbsSq(1), pts, eps=8.0)
    assert not is_spsh_region(t1, pts, eps=1e-6)
    assert min_eigenvalue(AbsSq(1), q) == pytest.approx(8.0)


def test_hyperhermitian_residue_canary():
    H = np.zeros((1, 8, 8))
    H[0, 0, 4] = 1.0  # asymmetric: H[0, 4, 0] left at zero
    with pytest.raises(ArithmeticError):
        hyper_hessians_from_real(H, 2)


def test_batch_hessians_match_pointwise():
    fn = Sum([AbsSq(2), Scale(RadialPow4(2), 0.1)])
    pts = np.random.default_rng(6).normal(size=(5, 8)) * 0.4
    batch = hyper_hessians(fn, pts)
    for i, p in enumerate(pts):
        assert np.allclose(batch[i], hyper_hessian(fn, p).q, atol=1e-10)


def test_grid_function_io(tmp_path):
    fn = AbsSq(1)
    grid = GridFunction.sample(fn, -np.ones(4), (9, 9, 9, 9), 0.25)
    path = tmp_path / "u.grid"
    grid.save(path)
    back = GridFunction.load(path)
    assert np.array_equal(back.values, grid.values)
    assert np.allclose(back.origin, grid.origin) and np.allclose(back.h, grid.h)
    idx = grid.index_of(np.zeros(4))
    assert np.allclose(grid.point_of(idx), 0.0)
    with pytest.raises(IndexError):
        grid.second_partial((0, 0, 0, 0), 1, 1)  # no stencil margin at the corner
    with pytest.raises(IndexError):
        grid.index_of(np.full(4, 99.0))
