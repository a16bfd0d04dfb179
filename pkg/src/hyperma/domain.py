"""Dirichlet problem instances and the exponential-barrier subsolution.

A :class:`DomainSpec` bundles the domain (ball / ellipsoid given by a
strictly psh defining function r, or an axis-aligned box), the boundary
data phi, and the right-hand side f.  :func:`build_subsolution`
constructs u_lower = phi_ext + s (e^{k r} - 1), choosing (k, s) by a
doubling search over the chain of inequalities

    f(q, u, grad u) <= (s k alpha e^{k r})^n (1 + (k/alpha)|grad r|^2)
                    <= det(hyperhessian u_lower),

and the result is re-verified directly against the Monge-Ampere
operator at seed-fixed samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    AbsSq,
    AnalyticFunction,
    ExpChain,
    Scale,
    Sum,
    function_from_spec,
)
from .hypermat import eigenvalues_batch, moore_det_batch
from .qcalc import hyper_hessians


class SubsolutionError(RuntimeError):
    """Raised when the doubling search or psh correction cannot verify."""


# ----------------------------------------------------------------------
# Right-hand sides f(q, u) / f(q, u, grad u)
# ----------------------------------------------------------------------

class Rhs:
    """Right-hand side of the equation; f > 0 and f_u >= 0 are assumed
    by the solver and testable via :meth:`DomainSpec.validate`."""

    kind = "base"
    depends_on_grad = False

    def value(self, pts, u=None, grad=None) -> np.ndarray:
        raise NotImplementedError

    def du(self, pts, u=None, grad=None) -> np.ndarray:
        """Partial derivative with respect to u."""
        return np.zeros(np.atleast_2d(pts).shape[0])

    def to_json(self) -> dict:
        raise NotImplementedError


class ConstantRhs(Rhs):
    kind = "constant"

    def __init__(self, value: float):
        self.c = float(value)
        if self.c <= 0:
            raise ValueError("constant right-hand side must be positive")

    def value(self, pts, u=None, grad=None):
        return np.full(np.atleast_2d(pts).shape[0], self.c)

    def to_json(self):
        return {"kind": self.kind, "params": {"value": self.c}}


class ScaledAbsSqRhs(Rhs):
    """f(q) = max(coeff * |q|^2 + const, floor).

    The floor keeps f strictly positive when coeff*|q|^2 vanishes inside
    the domain (degenerate benchmark); it perturbs the equation only on
    the set where the true f is below the floor.
    """

    kind = "scaled_abs_sq"

    def __init__(self, coeff: float, const: float = 0.0, floor: float = 1e-4):
        self.coeff = float(coeff)
        self.const = float(const)
        self.floor = float(floor)

    def value(self, pts, u=None, grad=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.maximum(self.coeff * np.sum(pts ** 2, axis=1) + self.const,
                          self.floor)

    def to_json(self):
        return {"kind": self.kind, "params": {
            "coeff": self.coeff, "const": self.const, "floor": self.floor}}


class ExpURhs(Rhs):
    """f(q, u) = scale * e^u; f_u = f >= 0."""

    kind = "exp_u"

    def __init__(self, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)

    def value(self, pts, u=None, grad=None):
        u = np.zeros(np.atleast_2d(pts).shape[0]) if u is None else np.asarray(u)
        return self.scale * np.exp(u)

    def du(self, pts, u=None, grad=None):
        return self.value(pts, u, grad)

    def to_json(self):
        return {"kind": self.kind, "params": {"scale": self.scale}}


class GradPowRhs(Rhs):
    """f(q, u, p) = base + |p|^n (gradient-dependent; subsolution path only)."""

    kind = "grad_pow"
    depends_on_grad = True

    def __init__(self, n: int, base: float = 1.0):
        self.n = int(n)
        self.base = float(base)

    def value(self, pts, u=None, grad=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if grad is None:
            grad = np.zeros_like(pts)
        mag = np.sqrt(np.sum(np.asarray(grad) ** 2, axis=1))
        return self.base + mag ** self.n

    def to_json(self):
        return {"kind": self.kind, "params": {"n": self.n, "base": self.base}}


def rhs_from_spec(spec: dict, n: int) -> Rhs:
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "constant":
        return ConstantRhs(params["value"])
    if kind == "scaled_abs_sq":
        return ScaledAbsSqRhs(params.get("coeff", 1.0), params.get("const", 0.0),
                              params.get("floor", 1e-4))
    if kind == "exp_u":
        return ExpURhs(params.get("scale", 1.0))
    if kind == "grad_pow":
        return GradPowRhs(params.get("n", n), params.get("base", 1.0))
    raise ValueError(f"unknown right-hand-side kind {kind!r}")


# ----------------------------------------------------------------------
# Domains
# ----------------------------------------------------------------------

@dataclass
class DomainSpec:
    """A Dirichlet problem instance: domain, boundary data, right-hand side."""

    n: int
    kind: str                     # "ball" | "ellipsoid" | "box"
    params: dict
    phi: AnalyticFunction
    f: Rhs
    exact: AnalyticFunction | None = None
    r: AnalyticFunction | None = field(init=False, default=None)

    def __post_init__(self):
        dim = 4 * self.n
        if self.kind == "ball":
            R = float(self.params.get("radius", 1.0))
            center = np.asarray(self.params.get("center", np.zeros(dim)), dtype=float)
            if R <= 0:
                raise ValueError("ball radius must be positive")
            self.params = {"radius": R, "center": center}
            # r(q) = |q - c|^2 - R^2
            self.r = _shifted_abs_sq(self.n, center, const=-R * R)
        elif self.kind == "ellipsoid":
            coeffs = np.asarray(self.params["coeffs"], dtype=float)
            if coeffs.shape != (self.n,) or np.any(coeffs <= 0):
                raise ValueError("ellipsoid needs n positive coefficients")
            self.params = {"coeffs": coeffs}
            self.r = AbsSq(self.n, coeffs=coeffs, const=-1.0)
        elif self.kind == "box":
            lo = np.broadcast_to(np.asarray(self.params["lo"], dtype=float), (dim,)).copy()
            hi = np.broadcast_to(np.asarray(self.params["hi"], dtype=float), (dim,)).copy()
            if np.any(hi <= lo):
                raise ValueError("box must have hi > lo")
            self.params = {"lo": lo, "hi": hi}
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    # -- geometry --------------------------------------------------------

    def bounding_box(self):
        dim = 4 * self.n
        if self.kind == "ball":
            c, R = self.params["center"], self.params["radius"]
            return c - R, c + R
        if self.kind == "ellipsoid":
            half = np.repeat(1.0 / np.sqrt(self.params["coeffs"]), 4)
            return -half, half
        return self.params["lo"], self.params["hi"]

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "box":
            lo, hi = self.params["lo"], self.params["hi"]
            return np.all((pts > lo) & (pts < hi), axis=1)
        return self.r.values(pts) < 0.0

    def boundary_project(self, pts) -> np.ndarray:
        """Radial projection onto the boundary (ball / ellipsoid only)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "ball":
            c, R = self.params["center"], self.params["radius"]
            d = pts - c
            norm = np.linalg.norm(d, axis=1, keepdims=True)
            norm[norm == 0] = 1.0
            return c + R * d / norm
        if self.kind == "ellipsoid":
            w = np.repeat(self.params["coeffs"], 4)
            scale = np.sqrt(np.sum(w * pts ** 2, axis=1, keepdims=True))
            scale[scale == 0] = 1.0
            return pts / scale
        raise ValueError("boundary projection is defined for implicit domains only")

    def sample_interior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        dim = 4 * self.n
        if self.kind == "box":
            lo, hi = self.params["lo"], self.params["hi"]
            return rng.uniform(lo, hi, size=(count, dim))
        if self.kind == "ball":
            c, R = self.params["center"], self.params["radius"]
            d = rng.normal(size=(count, dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            radii = R * rng.uniform(size=(count, 1)) ** (1.0 / dim)
            return c + radii * d
        # ellipsoid: stretch unit-ball samples
        inv = np.repeat(1.0 / np.sqrt(self.params["coeffs"]), 4)
        d = rng.normal(size=(count, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        radii = rng.uniform(size=(count, 1)) ** (1.0 / dim)
        return radii * d * inv

    def sample_boundary(self, count: int, rng: np.random.Generator) -> np.ndarray:
        dim = 4 * self.n
        if self.kind == "ball":
            c, R = self.params["center"], self.params["radius"]
            d = rng.normal(size=(count, dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            return c + R * d
        if self.kind == "ellipsoid":
            inv = np.repeat(1.0 / np.sqrt(self.params["coeffs"]), 4)
            d = rng.normal(size=(count, dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            return d * inv
        lo, hi = self.params["lo"], self.params["hi"]
        pts = rng.uniform(lo, hi, size=(count, dim))
        axes = rng.integers(0, dim, size=count)
        sides = rng.integers(0, 2, size=count)
        pts[np.arange(count), axes] = np.where(sides, hi[axes], lo[axes])
        return pts

    # -- invariants --------------------------------------------------------

    def validate(self, samples: int = 512, seed: int = 0) -> dict:
        """Sampled checks of the problem hypotheses: r strictly psh,
        f > 0, f_u >= 0 on the sampled range."""
        rng = np.random.default_rng(seed)
        pts = self.sample_interior(samples, rng)
        report = {}
        if self.r is not None:
            lam = eigenvalues_batch(hyper_hessians(self.r, pts))
            report["r_min_eig"] = float(np.min(lam[:, 0]))
            report["r_strictly_psh"] = report["r_min_eig"] > 0
        u_range = np.linspace(-1.0, 1.0, 5)
        fmin, fu_min = np.inf, np.inf
        for w in u_range:
            u = np.full(pts.shape[0], w)
            grad = rng.normal(size=pts.shape)
            fv = self.f.value(pts, u, grad)
            fmin = min(fmin, float(np.min(fv)))
            fu_min = min(fu_min, float(np.min(self.f.du(pts, u, grad))))
        report["f_min"] = fmin
        report["f_positive"] = fmin > 0
        report["fu_min"] = fu_min
        report["fu_nonnegative"] = fu_min >= 0
        return report

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                  for k, v in self.params.items()}
        data = {"n": self.n, "domain": {"kind": self.kind, "params": params},
                "phi": getattr(self.phi, "spec", None), "f": self.f.to_json()}
        return data

    @classmethod
    def from_json(cls, data) -> "DomainSpec":
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["n"])
        phi = function_from_spec(data["phi"], n)
        phi.spec = data["phi"]
        f = rhs_from_spec(data["f"], n)
        exact = None
        if data.get("exact"):
            exact = function_from_spec(data["exact"], n)
        dom = data["domain"]
        return cls(n=n, kind=dom["kind"], params=dict(dom.get("params", {})),
                   phi=phi, f=f, exact=exact)


def _shifted_abs_sq(n: int, center: np.ndarray, const: float) -> AnalyticFunction:
    """|q - c|^2 + const as an analytic function."""
    from .analytic import Affine
    quad = AbsSq(n)
    lin = Affine(n, coeffs=-2.0 * center, const=float(np.sum(center ** 2)) + const)
    return Sum([quad, lin])


# ----------------------------------------------------------------------
# Subsolution construction
# ----------------------------------------------------------------------

@dataclass
class Subsolution:
    """u_lower = phi_ext + s (e^{k r} - 1); equals phi on {r = 0}."""

    s: float
    k: float
    fn: AnalyticFunction
    phi_ext: AnalyticFunction
    psh_correction: float
    alpha: float
    growth_constant: float
    domain: DomainSpec
    # recorded constants of the gradient bound
    # |grad u_lower|^n <= c1 + c2 (s k e^{k r})^n |grad r|^n
    c1: float = 0.0
    c2: float = 1.0


def extend_boundary_data(phi: AnalyticFunction, domain: DomainSpec,
                         samples: int = 2048, seed: int = 0):
    """A psh extension of phi that still agrees with phi on the boundary.

    Already-psh functions extend as themselves; otherwise the correction
    c * r is added (r vanishes on the boundary and its Hessian is
    >= alpha I), with the smallest sampled c restoring psh-ness.
    Returns (extension, c).
    """
    rng = np.random.default_rng(seed)
    pts = np.vstack([domain.sample_interior(samples, rng),
                     domain.sample_boundary(max(samples // 4, 16), rng)])
    lam = eigenvalues_batch(hyper_hessians(phi, pts))
    min_eig = float(np.min(lam[:, 0]))
    if min_eig >= -1e-12:
        return phi, 0.0
    if domain.r is None:
        raise SubsolutionError(
            "non-psh boundary data on a box domain has no boundary-preserving "
            "psh correction; supply psh phi")
    alpha = alpha_of(domain, samples=samples, seed=seed + 1)
    c = -min_eig / alpha
    ext = Sum([phi, Scale(domain.r, c)])
    lam2 = eigenvalues_batch(hyper_hessians(ext, pts))
    if float(np.min(lam2[:, 0])) < -1e-9 * (1.0 + float(np.max(np.abs(lam2)))):
        raise SubsolutionError("psh correction failed to produce a psh extension")
    return ext, c


def alpha_of(domain: DomainSpec, samples: int = 2048, seed: int = 0) -> float:
    """min over samples of the smallest Hessian eigenvalue of r (must be > 0)."""
    if domain.r is None:
        raise ValueError("alpha is defined for implicit (ball/ellipsoid) domains")
    rng = np.random.default_rng(seed)
    pts = np.vstack([domain.sample_interior(samples, rng),
                     domain.sample_boundary(max(samples // 4, 16), rng)])
    lam = eigenvalues_batch(hyper_hessians(domain.r, pts))
    alpha = float(np.min(lam[:, 0]))
    if alpha <= 0:
        raise SubsolutionError(f"defining function is not strictly psh (alpha={alpha})")
    return alpha


def rhs_growth_constant(f: Rhs, m: float, domain: DomainSpec,
                        samples: int = 512, seed: int = 0) -> float:
    """Smallest sampled C with f(q, w, p) <= C (1 + |p|^n) for w <= m.

    |p| ranges over a log-spaced grid of magnitudes with random
    directions; raises if the ratio still grows at the top of the range
    (growth hypothesis violated).
    """
    n = domain.n
    rng = np.random.default_rng(seed)
    pts = domain.sample_interior(samples, rng)
    w_grid = np.linspace(m - 2.0, m, 5)
    mags = np.concatenate([[0.0], np.logspace(-2, 3, 11)])
    best = 0.0
    top, mid = 0.0, 0.0
    for w in w_grid:
        u = np.full(pts.shape[0], w)
        for mag in mags:
            d = rng.normal(size=pts.shape)
            d *= mag / np.linalg.norm(d, axis=1, keepdims=True)
            if mag == 0.0:
                d = np.zeros_like(pts)
            ratio = np.max(f.value(pts, u, d) / (1.0 + mag ** n))
            best = max(best, float(ratio))
            if mag == mags[-1]:
                top = max(top, float(ratio))
            elif mag == mags[-3]:
                mid = max(mid, float(ratio))
    if top > 2.0 * max(mid, 1e-300):
        raise SubsolutionError(
            "no finite growth constant on the sampled range: f outgrows 1 + |p|^n")
    return best


def build_subsolution(domain: DomainSpec, samples: int = 4096, seed: int = 0,
                      k_cap: float = 2.0 ** 20, s_cap: float = 2.0 ** 40) -> Subsolution:
    """Doubling search for (k, s) making phi_ext + s(e^{k r} - 1) a subsolution."""
    if domain.r is None:
        raise SubsolutionError("the subsolution construction needs a ball/ellipsoid domain")
    rng = np.random.default_rng(seed)
    n = domain.n
    interior = domain.sample_interior(samples, rng)
    boundary = domain.sample_boundary(max(samples // 4, 64), rng)

    phi_ext, c_corr = extend_boundary_data(domain.phi, domain, samples=samples, seed=seed)
    alpha = alpha_of(domain, samples=samples, seed=seed + 1)
    m = float(np.max(domain.phi.values(boundary)))
    C_m = rhs_growth_constant(domain.f, m, domain, seed=seed + 2)

    r_vals = domain.r.values(interior)
    r_grad = domain.r.gradients(interior)
    grad_r2 = np.sum(r_grad ** 2, axis=1)

    # |a+b|^n <= 2^{n-1}(|a|^n + |b|^n) splits grad u_lower into the phi
    # part (c1) and the barrier part (c2 times its closed form)
    max_grad_phi = float(np.max(np.linalg.norm(phi_ext.gradients(interior), axis=1)))
    c1 = 2.0 ** (n - 1) * max_grad_phi ** n
    c2 = 2.0 ** (n - 1)

    # the chain bound below is valid pointwise for every (k, s), so the
    # doubling search starts small to keep the barrier mild; growth in k
    # only becomes necessary for gradient-dependent right-hand sides
    k = 1.0
    while k <= k_cap:
        s = 1.0
        while s <= s_cap:
            cand = Sum([phi_ext, ExpChain(domain.r, k, scale=s, offset=-1.0)])
            grads = cand.gradients(interior)
            fvals = domain.f.value(interior, cand.values(interior), grads)
            bound = (s * k * alpha * np.exp(k * r_vals)) ** n \
                * (1.0 + (k / alpha) * grad_r2)
            if np.all(fvals <= bound):
                det = moore_det_batch(hyper_hessians(cand, interior))
                if np.all(det >= fvals - 1e-9 * (1.0 + np.abs(fvals))):
                    return Subsolution(s=s, k=k, fn=cand, phi_ext=phi_ext,
                                       psh_correction=c_corr, alpha=alpha,
                                       growth_constant=C_m, domain=domain,
                                       c1=c1, c2=c2)
            s *= 2.0
        k *= 2.0
    raise SubsolutionError("doubling search exhausted without a verified (k, s)")


def verify_subsolution(sub: Subsolution, domain: DomainSpec | None = None,
                       n_interior: int = 10000, n_boundary: int = 1000,
                       seed: int = 0) -> dict:
    """Sampled verification report: boundary agreement, det >= f margin,
    and psh-ness of the candidate (failures are reported, not raised)."""
    domain = domain or sub.domain
    rng = np.random.default_rng(seed)
    interior = domain.sample_interior(n_interior, rng)
    boundary = domain.sample_boundary(n_boundary, rng)

    mismatch = float(np.max(np.abs(sub.fn.values(boundary)
                                   - domain.phi.values(boundary))))
    hh = hyper_hessians(sub.fn, interior)
    det = moore_det_batch(hh)
    fvals = domain.f.value(interior, sub.fn.values(interior),
                           sub.fn.gradients(interior))
    margin = float(np.min(det - fvals))
    lam = eigenvalues_batch(hh)
    min_eig = float(np.min(lam[:, 0]))
    report = {
        "s": sub.s, "k": sub.k, "seed": seed,
        "alpha": sub.alpha, "growth_constant": sub.growth_constant,
        "c1": sub.c1, "c2": sub.c2,
        "psh_correction": sub.psh_correction,
        "n_interior": n_interior, "n_boundary": n_boundary,
        "boundary_mismatch": mismatch,
        "subsolution_margin": margin,
        "min_hessian_eigenvalue": min_eig,
        "boundary_ok": mismatch <= 1e-9,
        "margin_ok": margin >= -1e-9,
        "psh_ok": min_eig >= -1e-9,
    }
    report["passed"] = report["boundary_ok"] and report["margin_ok"] and report["psh_ok"]
    return report
