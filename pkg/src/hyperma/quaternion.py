"""Quaternion scalar arithmetic.

Scalars live in H = {t + x*i + y*j + z*k} with the Hamilton relations
i^2 = j^2 = k^2 = -1, ij = -ji = k, jk = -kj = i, ki = -ik = j.
The ambient vector space convention is a *right* H-module, so both left
and right multiplication by scalars are provided.

Besides the scalar ``Quaternion`` class, this module exposes vectorized
helpers (``qmul``, ``qconj``, ...) operating on numpy arrays whose last
axis has length 4 in the component order [t, x, y, z]; the rest of the
package uses these for batch work on matrices and grids.
"""

from __future__ import annotations

import math

import numpy as np


class Quaternion:
    """A quaternion t + x*i + y*j + z*k with double-precision components."""

    __slots__ = ("t", "x", "y", "z")

    def __init__(self, t: float = 0.0, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        self.t = float(t)
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    # -- constructors / converters ------------------------------------

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        t, x, y, z = arr
        return cls(t, x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z], dtype=float)

    def to_json(self) -> list:
        """JSON encoding: the 4-array [t, x, y, z]."""
        return [self.t, self.x, self.y, self.z]

    @classmethod
    def from_json(cls, data) -> "Quaternion":
        if len(data) != 4:
            raise ValueError(f"quaternion JSON must be a 4-array, got {data!r}")
        return cls(*data)

    # -- algebra -------------------------------------------------------

    def __add__(self, other):
        other = _promote(other)
        return Quaternion(self.t + other.t, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    __radd__ = __add__

    def __sub__(self, other):
        other = _promote(other)
        return Quaternion(self.t - other.t, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __rsub__(self, other):
        return _promote(other) - self

    def __neg__(self):
        return Quaternion(-self.t, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(self.t * other, self.x * other,
                              self.y * other, self.z * other)
        p, q = self, other
        return Quaternion(
            p.t * q.t - p.x * q.x - p.y * q.y - p.z * q.z,
            p.t * q.x + p.x * q.t + p.y * q.z - p.z * q.y,
            p.t * q.y - p.x * q.z + p.y * q.t + p.z * q.x,
            p.t * q.z + p.x * q.y - p.y * q.x + p.z * q.t,
        )

    def __rmul__(self, other):
        # Reals commute with everything; a genuine left quaternion factor
        # arrives via Quaternion.__mul__ instead.
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return self * (1.0 / other)
        return self * other.inverse()

    def conj(self) -> "Quaternion":
        return Quaternion(self.t, -self.x, -self.y, -self.z)

    def real_part(self) -> float:
        return self.t

    def norm2(self) -> float:
        return self.t * self.t + self.x * self.x + self.y * self.y + self.z * self.z

    def __abs__(self) -> float:
        return math.sqrt(self.norm2())

    def inverse(self) -> "Quaternion":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return self.conj() * (1.0 / n2)

    # -- comparisons / misc --------------------------------------------

    def __eq__(self, other):
        other = _promote(other)
        return (self.t == other.t and self.x == other.x
                and self.y == other.y and self.z == other.z)

    def __hash__(self):
        return hash((self.t, self.x, self.y, self.z))

    def isclose(self, other, rel=1e-12, abs_tol=1e-12) -> bool:
        other = _promote(other)
        scale = max(abs(self), abs(other), 1.0)
        d = self - other
        return abs(d) <= abs_tol + rel * scale

    def __repr__(self):
        return f"Quaternion({self.t}, {self.x}, {self.y}, {self.z})"


def _promote(v) -> Quaternion:
    if isinstance(v, Quaternion):
        return v
    if isinstance(v, (int, float)):
        return Quaternion(v)
    raise TypeError(f"cannot interpret {v!r} as a quaternion")


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)

#: e_0 = 1, e_1 = i, e_2 = j, e_3 = k
UNITS = (ONE, I, J, K)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product p*q."""
    return _promote(p) * _promote(q)


def conj(q: Quaternion) -> Quaternion:
    return _promote(q).conj()


def real_part(q) -> float:
    return _promote(q).real_part()


# ----------------------------------------------------------------------
# Vectorized component arithmetic on (..., 4) arrays.
# ----------------------------------------------------------------------

def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of component arrays, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pt, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qt, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=float)
    out[..., 0] = pt * qt - px * qx - py * qy - pz * qz
    out[..., 1] = pt * qx + px * qt + py * qz - pz * qy
    out[..., 2] = pt * qy - px * qz + py * qt + pz * qx
    out[..., 3] = pt * qz + px * qy - py * qx + pz * qt
    return out


def qconj(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = -a.copy()
    out[..., 0] = a[..., 0]
    return out


def qreal(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float)[..., 0]


def qimag_norm(a: np.ndarray) -> np.ndarray:
    """Euclidean size of the imaginary part, per element."""
    a = np.asarray(a, dtype=float)
    return np.sqrt(np.sum(a[..., 1:] ** 2, axis=-1))


def qnorm2(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.sum(a * a, axis=-1)


def qscalar(values: np.ndarray) -> np.ndarray:
    """Embed a real array as t-only quaternion components."""
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape + (4,), dtype=float)
    out[..., 0] = values
    return out
