"""Quaternionic differential operators and plurisubharmonicity tests.

The Dirac-Weyl operator d/dq_bar multiplies partial derivatives by the
units e_a on the left; its partner d/dq = conj(d/dq_bar conj(.))
multiplies by conj-units on the right.  Composing them gives the
hyperhermitian Hessian with entries

    (i, j)  ->  sum_{a,b} e_b * (d^2 u / dx_i^a dx_j^b) * ebar_a,

where ebar_0 = 1 and ebar_a = -e_a for a >= 1.  For one variable and
real u this collapses to the R^4 Laplacian; the 16-term expansion's
cross terms cancel exactly for symmetric second derivatives.

Operators accept either an :class:`~hyperma.analytic.AnalyticFunction`
(exact derivatives) or a :class:`GridFunction` (2nd-order central
differences), so grid results can always be checked against closed
forms.

Convention note (fixed against the oracle): for u = quadratic_form(A, .)
the hyperhermitian Hessian equals 8 * A-transpose = 8 * conj(A) exactly.
Downstream code only consumes determinants and definiteness, which are
invariant under that transposition.  The constant 8 follows the operator
definitions verbatim; no 1/4 renormalization is applied.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .analytic import AnalyticFunction
from .hypermat import HyperHermitianMatrix, eigenvalues_batch, moore_det_batch
from .quaternion import Quaternion, qmul

HERMITIZE_TOL = 1e-9


def _unit_tensor() -> np.ndarray:
    """T[a, b] = e_b * ebar_a as 4-component rows: entry = sum_ab H_ab T[a,b]."""
    e = np.zeros((4, 4))
    np.fill_diagonal(e, 1.0)
    ebar = e.copy()
    ebar[1:] *= -1.0
    T = np.empty((4, 4, 4))
    for a in range(4):
        for b in range(4):
            T[a, b] = qmul(e[b], ebar[a])
    return T

_T = _unit_tensor()


def hyper_hessians_from_real(H: np.ndarray, n: int,
                             tol: float = HERMITIZE_TOL) -> np.ndarray:
    """Map real Hessians (..., 4n, 4n) to quaternion components (..., n, n, 4).

    Asserts the hyperhermitian residue is below ``tol`` (relative), then
    symmetrizes A <- (A + A*)/2 to strip O(h^2) asymmetry noise.
    """
    H = np.asarray(H, dtype=float)
    batch = H.shape[:-2]
    Hr = H.reshape(batch + (n, 4, n, 4))
    hh = np.einsum("...iajb,abc->...ijc", Hr, _T)
    star = hh.copy()
    star = np.swapaxes(star, -3, -2)
    star = np.concatenate([star[..., :1], -star[..., 1:]], axis=-1)
    residue = np.max(np.abs(hh - star)) if hh.size else 0.0
    scale = 1.0 + (np.max(np.abs(hh)) if hh.size else 0.0)
    if residue > tol * scale:
        raise ArithmeticError(
            f"hyperhermitian residue {residue:.3e} above tolerance "
            "(asymmetric real Hessian input?)")
    return 0.5 * (hh + star)


# ----------------------------------------------------------------------
# Grid functions
# ----------------------------------------------------------------------

class GridFunction:
    """Real samples on a rectangular lattice in R^{4n}.

    ``values`` has one axis per real coordinate (4n axes); ``h`` is the
    spacing (scalar or per-axis); ``origin`` is the coordinate of the
    [0,...,0] node.
    """

    def __init__(self, n: int, values: np.ndarray, h, origin):
        values = np.asarray(values, dtype=float)
        if values.ndim != 4 * n:
            raise ValueError(f"values must have 4n = {4 * n} axes, got {values.ndim}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        h = np.broadcast_to(np.asarray(h, dtype=float), (4 * n,)).copy()
        if np.any(h <= 0):
            raise ValueError("grid spacing must be positive")
        self.n = n
        self.values = values
        self.h = h
        self.origin = np.asarray(origin, dtype=float).reshape(4 * n)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def sample(cls, fn: AnalyticFunction, origin, shape, h) -> "GridFunction":
        """Sample an analytic function on a lattice."""
        n = fn.n
        origin = np.asarray(origin, dtype=float)
        h = np.broadcast_to(np.asarray(h, dtype=float), (4 * n,))
        axes = [origin[d] + h[d] * np.arange(shape[d]) for d in range(4 * n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = fn.values(pts).reshape(shape)
        return cls(n, vals, h, origin)

    def index_of(self, pt) -> tuple:
        """Nearest lattice index of a point (must lie on/near the lattice)."""
        idx = np.rint((np.asarray(pt, dtype=float) - self.origin) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            raise IndexError(f"point {pt} is outside the lattice")
        return tuple(idx)

    def point_of(self, idx) -> np.ndarray:
        return self.origin + self.h * np.asarray(idx, dtype=float)

    def _require_margin(self, idx, cells: int):
        idx = np.asarray(idx)
        if np.any(idx < cells) or np.any(idx + cells >= np.array(self.shape)):
            raise IndexError(
                f"lattice index {tuple(idx)} lacks the {cells}-cell stencil margin")

    def partial(self, idx, axis: int) -> float:
        """Central first difference along one real axis, O(h^2)."""
        self._require_margin(idx, 1)
        up = list(idx); up[axis] += 1
        dn = list(idx); dn[axis] -= 1
        return (self.values[tuple(up)] - self.values[tuple(dn)]) / (2.0 * self.h[axis])

    def second_partial(self, idx, a: int, b: int) -> float:
        """Central second difference (3-point diagonal / 4-point cross)."""
        self._require_margin(idx, 1)
        v = self.values
        idx = list(idx)
        if a == b:
            up = list(idx); up[a] += 1
            dn = list(idx); dn[a] -= 1
            return (v[tuple(up)] - 2.0 * v[tuple(idx)] + v[tuple(dn)]) / self.h[a] ** 2
        pp = list(idx); pp[a] += 1; pp[b] += 1
        mm = list(idx); mm[a] -= 1; mm[b] -= 1
        pm = list(idx); pm[a] += 1; pm[b] -= 1
        mp = list(idx); mp[a] -= 1; mp[b] += 1
        return (v[tuple(pp)] + v[tuple(mm)] - v[tuple(pm)] - v[tuple(mp)]) \
            / (4.0 * self.h[a] * self.h[b])

    def real_hessian_at(self, idx) -> np.ndarray:
        dim = 4 * self.n
        H = np.empty((dim, dim))
        for a in range(dim):
            for b in range(a, dim):
                H[a, b] = H[b, a] = self.second_partial(idx, a, b)
        return H

    # -- persistence: JSON header + little-endian float64 sidecar ------

    def save(self, path) -> None:
        path = Path(path)
        header = {"n": self.n, "shape": list(self.shape),
                  "h": self.h.tolist(), "origin": self.origin.tolist()}
        path.write_text(json.dumps(header))
        self.values.astype("<f8").tofile(path.with_suffix(path.suffix + ".bin"))

    @classmethod
    def load(cls, path) -> "GridFunction":
        path = Path(path)
        header = json.loads(path.read_text())
        raw = np.fromfile(path.with_suffix(path.suffix + ".bin"), dtype="<f8")
        values = raw.reshape(header["shape"])
        return cls(header["n"], values, header["h"], header["origin"])


# ----------------------------------------------------------------------
# Dirac-Weyl operators
# ----------------------------------------------------------------------

def _grid_partials(u: GridFunction, q, var: int) -> np.ndarray:
    idx = u.index_of(q)
    return np.array([u.partial(idx, 4 * var + a) for a in range(4)])


def _fd_partials(fn, q, var: int, step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar/quaternion-valued callable."""
    q = np.asarray(q, dtype=float)
    outs = []
    for a in range(4):
        e = np.zeros_like(q); e[4 * var + a] = step
        fp, fm = fn(q + e), fn(q - e)
        if isinstance(fp, Quaternion):
            outs.append((fp.to_array() - fm.to_array()) / (2 * step))
        else:
            outs.append(np.array([(fp - fm) / (2 * step), 0.0, 0.0, 0.0]))
    return np.stack(outs)  # (4, 4): partial a as quaternion components


def _partials_of(u, q, var: int) -> np.ndarray:
    """Quaternion components (4, 4) of the four real partials in variable var."""
    if isinstance(u, AnalyticFunction):
        g = u.gradient(q)
        out = np.zeros((4, 4))
        out[:, 0] = g[4 * var:4 * var + 4]
        return out
    if isinstance(u, GridFunction):
        g = _grid_partials(u, q, var)
        out = np.zeros((4, 4))
        out[:, 0] = g
        return out
    return _fd_partials(u, q, var)


_E4 = np.eye(4)
_EBAR4 = np.diag([1.0, -1.0, -1.0, -1.0])


def dirac_weyl_bar(u, q, j: int = 0) -> Quaternion:
    """(d/dq_bar_j) u = u_t + i u_x + j u_y + k u_z (units on the left)."""
    parts = _partials_of(u, q, j)
    acc = np.zeros(4)
    for a in range(4):
        acc += qmul(_E4[a], parts[a])
    return Quaternion.from_array(acc)


def dirac_weyl(u, q, i: int = 0) -> Quaternion:
    """(d/dq_i) u = u_t - u_x i - u_y j - u_z k (conj-units on the right)."""
    parts = _partials_of(u, q, i)
    acc = np.zeros(4)
    for a in range(4):
        acc += qmul(parts[a], _EBAR4[a])
    return Quaternion.from_array(acc)


# ----------------------------------------------------------------------
# Hyperhermitian Hessian, Monge-Ampere operator, psh tests
# ----------------------------------------------------------------------

def hyper_hessian(u, q) -> HyperHermitianMatrix:
    """The matrix (d^2 u / dq_i dq_bar_j)(q)."""
    if isinstance(u, AnalyticFunction):
        H = u.real_hessian(q)
        n = u.n
    elif isinstance(u, GridFunction):
        idx = u.index_of(q)
        H = u.real_hessian_at(idx)
        n = u.n
    else:
        raise TypeError("hyper_hessian needs an AnalyticFunction or GridFunction")
    hh = hyper_hessians_from_real(H[None], n)[0]
    return HyperHermitianMatrix(hh, tol=HERMITIZE_TOL * (1.0 + np.max(np.abs(hh))))


def hyper_hessians(u: AnalyticFunction, pts) -> np.ndarray:
    """Batch quaternion Hessian components (N, n, n, 4) of an analytic function."""
    return hyper_hessians_from_real(u.real_hessians(pts), u.n)


def ma_operator(u, q) -> float:
    """Moore determinant of the hyperhermitian Hessian at q."""
    from .hypermat import moore_det
    return moore_det(hyper_hessian(u, q))


def ma_operator_batch(u: AnalyticFunction, pts) -> np.ndarray:
    return moore_det_batch(hyper_hessians(u, pts))


def is_psh_at(u, q, tol: float = 1e-10) -> bool:
    """Non-negative definiteness of the hyperhermitian Hessian at q."""
    A = hyper_hessian(u, q)
    lam = eigenvalues_batch(A.q[None])[0]
    return bool(lam[0] >= -tol * (1.0 + abs(lam[-1])))


def is_spsh_region(u, pts, eps: float) -> bool:
    """Hessian >= eps * I (smallest eigenvalue) at every sample point."""
    if isinstance(u, AnalyticFunction):
        hh = hyper_hessians(u, pts)
        lam = eigenvalues_batch(hh)
        return bool(np.all(lam[:, 0] >= eps))
    return all(min_eigenvalue(u, q) >= eps for q in pts)


def min_eigenvalue(u, q) -> float:
    A = hyper_hessian(u, q)
    return float(eigenvalues_batch(A.q[None])[0][0])
