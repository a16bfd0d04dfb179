"""Quaternionic linear algebra, plurisubharmonicity tests, and a
desk-scale finite-difference Dirichlet solver for the quaternionic
Monge-Ampere equation det(d^2 u / dq_i dq_bar_j) = f(q, u)."""

from .quaternion import Quaternion, I, J, K, ONE, UNITS
from .hypermat import (
    QuatMatrix,
    HyperHermitianMatrix,
    canonical_cycles,
    congruence,
    conj_transpose,
    eigenvalues,
    is_positive_definite,
    moore_det,
    quadratic_form,
)

__all__ = [
    "Quaternion", "I", "J", "K", "ONE", "UNITS",
    "QuatMatrix", "HyperHermitianMatrix",
    "canonical_cycles", "congruence", "conj_transpose", "eigenvalues",
    "is_positive_definite", "moore_det", "quadratic_form",
]

__version__ = "0.1.0"
