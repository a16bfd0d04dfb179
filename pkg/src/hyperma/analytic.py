"""Closed-form test functions on H^n with exact derivatives.

Points are flat real vectors of length 4n, laid out per quaternionic
variable as [t_1, x_1, y_1, z_1, t_2, ...].  Every function exposes a
batch API over point arrays of shape (N, 4n): values (N,), gradients
(N, 4n), and real Hessians (N, 4n, 4n).  The quaternionic calculus in
:mod:`hyperma.qcalc` derives Dirac-Weyl derivatives and hyperhermitian
Hessians from these.

Kinds provided: quadratic forms xi* A xi of hyperhermitian A, the
squared norm |q|^2, the radial quartic |q|^4, exp(lambda |q|^2),
coordinate-affine functions, and sums / scalings / exponential chains
of the above (enough to express the subsolution phi + s(e^{k r} - 1)).
"""

from __future__ import annotations

import numpy as np

from .hypermat import HyperHermitianMatrix, _as_hyper
from .quaternion import qmul, qconj

#: Unit multiplication table Re(conj(e_a) e_b) used to realify
#: quaternionic quadratic forms; equals the 4x4 identity.
_E = np.eye(4)


def _pts(pts, dim4n: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != dim4n:
        raise ValueError(f"points must have {dim4n} real coordinates, got {pts.shape[1]}")
    return pts


class AnalyticFunction:
    """Base class: real-valued smooth function of n quaternionic variables."""

    def __init__(self, n: int):
        self.n = n
        self.dim = 4 * n

    def values(self, pts) -> np.ndarray:
        raise NotImplementedError

    def gradients(self, pts) -> np.ndarray:
        raise NotImplementedError

    def real_hessians(self, pts) -> np.ndarray:
        raise NotImplementedError

    # pointwise conveniences
    def value(self, pt) -> float:
        return float(self.values(np.asarray(pt)[None])[0])

    def gradient(self, pt) -> np.ndarray:
        return self.gradients(np.asarray(pt)[None])[0]

    def real_hessian(self, pt) -> np.ndarray:
        return self.real_hessians(np.asarray(pt)[None])[0]

    def __call__(self, pt) -> float:
        return self.value(pt)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Affine(self.n, const=float(other))
        return Sum([self, other])

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return Sum([self, Affine(self.n, const=-float(other))])
        return Sum([self, Scale(other, -1.0)])

    def __mul__(self, c: float):
        return Scale(self, float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Scale(self, -1.0)


class QuadraticForm(AnalyticFunction):
    """u(q) = xi* A xi for hyperhermitian A, with xi the coordinate vector.

    Realified as x^T M x with M_(i,a),(j,b) = Re(conj(e_a) a_ij e_b),
    a symmetric real 4n x 4n matrix.
    """

    def __init__(self, A, const: float = 0.0):
        A = _as_hyper(A)
        super().__init__(A.n)
        self.A = A
        self.const = float(const)
        self.M = _realify(A.q)

    def values(self, pts):
        pts = _pts(pts, self.dim)
        return np.einsum("pi,ij,pj->p", pts, self.M, pts) + self.const

    def gradients(self, pts):
        pts = _pts(pts, self.dim)
        return 2.0 * pts @ self.M

    def real_hessians(self, pts):
        pts = _pts(pts, self.dim)
        return np.broadcast_to(2.0 * self.M, (pts.shape[0],) + self.M.shape).copy()


def _realify(Aq: np.ndarray) -> np.ndarray:
    """Real symmetric matrix of the quadratic form Re(xi* A xi)."""
    n = Aq.shape[0]
    M = np.zeros((4 * n, 4 * n))
    for a in range(4):
        ea = np.zeros(4); ea[a] = 1.0
        for b in range(4):
            eb = np.zeros(4); eb[b] = 1.0
            # Re(conj(e_a) * p * e_b) for each entry p of A
            coeff = qmul(qmul(qconj(ea), Aq), eb)[..., 0]  # (n, n)
            for i in range(n):
                for j in range(n):
                    M[4 * i + a, 4 * j + b] += coeff[i, j]
    return 0.5 * (M + M.T)


class AbsSq(QuadraticForm):
    """|q|^2 = sum_i |q_i|^2 (+ optional constant), i.e. the identity form."""

    def __init__(self, n: int, coeffs=None, const: float = 0.0):
        coeffs = np.ones(n) if coeffs is None else np.asarray(coeffs, dtype=float)
        q = np.zeros((n, n, 4))
        q[np.arange(n), np.arange(n), 0] = coeffs
        super().__init__(HyperHermitianMatrix(q), const=const)
        self.coeffs = coeffs


class RadialPow4(AnalyticFunction):
    """|q|^4 = (sum_i |q_i|^2)^2."""

    def values(self, pts):
        pts = _pts(pts, self.dim)
        return np.sum(pts ** 2, axis=1) ** 2

    def gradients(self, pts):
        pts = _pts(pts, self.dim)
        r2 = np.sum(pts ** 2, axis=1)
        return 4.0 * r2[:, None] * pts

    def real_hessians(self, pts):
        pts = _pts(pts, self.dim)
        r2 = np.sum(pts ** 2, axis=1)
        eye = np.eye(self.dim)
        return (4.0 * r2[:, None, None] * eye[None]
                + 8.0 * pts[:, :, None] * pts[:, None, :])


class ExpAbsSq(AnalyticFunction):
    """exp(lambda |q|^2)."""

    def __init__(self, n: int, lam: float = 1.0):
        super().__init__(n)
        self.lam = float(lam)

    def values(self, pts):
        pts = _pts(pts, self.dim)
        return np.exp(self.lam * np.sum(pts ** 2, axis=1))

    def gradients(self, pts):
        pts = _pts(pts, self.dim)
        v = self.values(pts)
        return 2.0 * self.lam * v[:, None] * pts

    def real_hessians(self, pts):
        pts = _pts(pts, self.dim)
        v = self.values(pts)
        eye = np.eye(self.dim)
        return v[:, None, None] * (2.0 * self.lam * eye[None]
                                   + 4.0 * self.lam ** 2 * pts[:, :, None] * pts[:, None, :])


class Affine(AnalyticFunction):
    """c0 + sum_I c_I x_I over the 4n real coordinates."""

    def __init__(self, n: int, coeffs=None, const: float = 0.0):
        super().__init__(n)
        self.coeffs = (np.zeros(self.dim) if coeffs is None
                       else np.asarray(coeffs, dtype=float))
        if self.coeffs.shape != (self.dim,):
            raise ValueError("affine coefficient vector must have length 4n")
        self.const = float(const)

    def values(self, pts):
        pts = _pts(pts, self.dim)
        return pts @ self.coeffs + self.const

    def gradients(self, pts):
        pts = _pts(pts, self.dim)
        return np.broadcast_to(self.coeffs, pts.shape).copy()

    def real_hessians(self, pts):
        pts = _pts(pts, self.dim)
        return np.zeros((pts.shape[0], self.dim, self.dim))


class Sum(AnalyticFunction):
    def __init__(self, parts):
        parts = list(parts)
        super().__init__(parts[0].n)
        if any(p.n != self.n for p in parts):
            raise ValueError("summands must share the quaternionic dimension")
        self.parts = parts

    def values(self, pts):
        return sum(p.values(pts) for p in self.parts)

    def gradients(self, pts):
        return sum(p.gradients(pts) for p in self.parts)

    def real_hessians(self, pts):
        return sum(p.real_hessians(pts) for p in self.parts)


class Scale(AnalyticFunction):
    def __init__(self, inner: AnalyticFunction, c: float):
        super().__init__(inner.n)
        self.inner = inner
        self.c = float(c)

    def values(self, pts):
        return self.c * self.inner.values(pts)

    def gradients(self, pts):
        return self.c * self.inner.gradients(pts)

    def real_hessians(self, pts):
        return self.c * self.inner.real_hessians(pts)


class ExpChain(AnalyticFunction):
    """scale * (exp(k * inner) + offset); e.g. s(e^{k r} - 1)."""

    def __init__(self, inner: AnalyticFunction, k: float,
                 scale: float = 1.0, offset: float = 0.0):
        super().__init__(inner.n)
        self.inner = inner
        self.k = float(k)
        self.scale = float(scale)
        self.offset = float(offset)

    def values(self, pts):
        return self.scale * (np.exp(self.k * self.inner.values(pts)) + self.offset)

    def gradients(self, pts):
        e = np.exp(self.k * self.inner.values(pts))
        return self.scale * self.k * e[:, None] * self.inner.gradients(pts)

    def real_hessians(self, pts):
        e = np.exp(self.k * self.inner.values(pts))
        g = self.inner.gradients(pts)
        H = self.inner.real_hessians(pts)
        return self.scale * e[:, None, None] * (
            self.k * H + self.k ** 2 * g[:, :, None] * g[:, None, :])


# ----------------------------------------------------------------------
# Spec factory (problem files / CLI)
# ----------------------------------------------------------------------

def function_from_spec(spec: dict, n: int) -> AnalyticFunction:
    """Build a test function from a {kind, params} JSON fragment."""
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind in ("zero", "constant"):
        return Affine(n, const=params.get("value", 0.0))
    if kind == "abs_sq":
        return AbsSq(n, coeffs=params.get("coeffs"),
                     const=params.get("const", 0.0))
    if kind == "radial_pow4":
        return RadialPow4(n)
    if kind == "exp_abs_sq":
        return ExpAbsSq(n, lam=params.get("lambda", 1.0))
    if kind == "affine":
        return Affine(n, coeffs=params.get("coeffs"),
                      const=params.get("const", 0.0))
    if kind == "quadratic_form":
        A = HyperHermitianMatrix(np.asarray(params["entries"], dtype=float))
        return QuadraticForm(A, const=params.get("const", 0.0))
    raise ValueError(f"unknown function kind {kind!r}")
