import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperma.quaternion import (I, J, K, ONE, Quaternion, conj, mul, qconj,
                                qmul, qnorm2, real_part)

finite = st.floats(min_value=-100, max_value=100, allow_nan=False)
quat = st.builds(Quaternion, finite, finite, finite, finite)


def test_hamilton_table():
    assert I * J == K
    assert J * I == -K
    assert J * K == I
    assert K * J == -I
    assert K * I == J
    assert I * K == -J
    for u in (I, J, K):
        assert u * u == -ONE


def test_identity_and_expansion():
    q = Quaternion(1, 2, 3, 4)
    assert q * ONE == q
    assert ONE * q == q
    assert (ONE + I) * (ONE + J) == Quaternion(1, 1, 1, 1)


def test_conj_examples():
    assert conj(I) == -I
    assert conj(Quaternion(1, 1, 1, 1)) == Quaternion(1, -1, -1, -1)


def test_real_part_examples():
    assert real_part(Quaternion(3, 2, 0, 0)) == 3.0
    q = Quaternion(0.7, -1, 2, 0.5)
    assert real_part(q + conj(q)) == pytest.approx(2 * real_part(q))
    assert real_part(I * J * K) == -1.0


@given(quat, quat)
@settings(max_examples=100)
def test_conj_antiautomorphism(p, q):
    lhs = conj(p * q)
    rhs = conj(q) * conj(p)
    assert lhs.isclose(rhs, rel=1e-9, abs_tol=1e-9)


@given(quat, quat)
@settings(max_examples=100)
def test_norm_multiplicativity(p, q):
    lhs = abs(p * q)
    rhs = abs(p) * abs(q)
    assert abs(lhs - rhs) <= 1e-12 * (1 + rhs)


@given(quat, quat, quat)
@settings(max_examples=100)
def test_associativity(p, q, r):
    lhs = (p * q) * r
    rhs = p * (q * r)
    assert lhs.isclose(rhs, rel=1e-8, abs_tol=1e-8)


def test_inverse():
    q = Quaternion(1, -2, 0.5, 3)
    assert (q * q.inverse()).isclose(ONE)
    assert (q.inverse() * q).isclose(ONE)
    with pytest.raises(ZeroDivisionError):
        Quaternion().inverse()


def test_json_round_trip():
    q = Quaternion(0.25, -1.5, 3.0, -0.125)
    assert Quaternion.from_json(q.to_json()) == q
    assert q.to_json() == [0.25, -1.5, 3.0, -0.125]
    with pytest.raises(ValueError):
        Quaternion.from_json([1, 2, 3])


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(50, 4))
    b = rng.normal(size=(50, 4))
    batch = qmul(a, b)
    for i in range(50):
        p = Quaternion.from_array(a[i]) * Quaternion.from_array(b[i])
        assert np.allclose(batch[i], p.to_array(), atol=1e-12)
    assert np.allclose(qconj(a)[:, 0], a[:, 0])
    assert np.allclose(qconj(a)[:, 1:], -a[:, 1:])
    assert np.allclose(qnorm2(a), np.sum(a ** 2, axis=1))
