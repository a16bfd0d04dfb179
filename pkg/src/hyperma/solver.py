"""Finite-difference Dirichlet solver for det(hyperhessian u) = f(q, u).

The equation is solved in log form, G(u) = log det(hyperhessian_h u)
- log f(q, u) = 0 at the interior lattice nodes, by a damped Newton
iteration with matrix-free Krylov (lgmres) inner solves.  Iterates are
kept strictly psh (nodal Hessian eigenvalues above a floor) by
backtracking, and the sup-norm residual history is non-increasing.

Boundary treatment:

* Box domains: the lattice spans the box exactly, face nodes carry the
  Dirichlet data, and all interior stencils are uniform (second order).
* Ball / ellipsoid domains ({r < 0}): axis-aligned second differences
  use boundary-crossing corrections -- the Dirichlet data is imposed at
  the exact r = 0 crossing of each lattice segment with the 3-point
  unequal-spacing formula, which keeps second-order global accuracy.
  Cross-variable mixed stencils near the boundary fall back to ghost
  values phi(radial projection), a first-order shortcut that only
  matters for n >= 2 on non-box domains.

An assembled sparse Laplacian with the same boundary treatment backs
the independent oracles: the n = 1 Poisson equivalence check and the
discrete harmonic extension used by the barrier bounds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import DomainSpec, Subsolution, build_subsolution
from .hypermat import eigenvalues_batch, moore_det_batch
from .mixdisc import mixed_with_repeats_batch
from .qcalc import GridFunction, hyper_hessians_from_real


class SolveError(RuntimeError):
    pass


# ----------------------------------------------------------------------
# Discretization
# ----------------------------------------------------------------------

THETA_MIN = 1e-3  # crossing-fraction clamp, keeps stencil weights bounded


@dataclass
class Discretization:
    domain: DomainSpec
    h: float
    origin: np.ndarray          # (4n,)
    shape: tuple                # full lattice shape
    int_flat: np.ndarray        # (M,) flat lattice indices of unknowns
    points: np.ndarray          # (M, 4n) coordinates of unknowns
    strides: np.ndarray         # (4n,) flat strides
    hp: np.ndarray              # (4n, M) forward arm lengths, units of h
    hm: np.ndarray              # (4n, M) backward arm lengths
    bval_p: np.ndarray          # (4n, M) data at forward crossings
    bval_m: np.ndarray
    irr_p: np.ndarray           # (4n, M) bool, forward neighbour outside
    irr_m: np.ndarray
    ext_values: np.ndarray      # full lattice; data at non-interior nodes, 0 inside
    cross_pairs: list           # real-axis pairs (a, b) across quaternion variables

    @property
    def n(self):
        return self.domain.n

    @property
    def num_interior(self):
        return self.int_flat.size

    def full_from_interior(self, u_int, bc: str = "data") -> np.ndarray:
        U = self.ext_values.copy() if bc == "data" else np.zeros(self.shape)
        U.flat[self.int_flat] = u_int
        return U


def discretize(domain: DomainSpec, h: float) -> Discretization:
    n = domain.n
    dim = 4 * n
    if domain.kind == "box":
        lo, hi = domain.params["lo"], domain.params["hi"]
        counts = (hi - lo) / h
        if np.max(np.abs(counts - np.rint(counts))) > 1e-9:
            raise SolveError("box extents must be integer multiples of h")
        shape = tuple(np.rint(counts).astype(int) + 1)
        origin = lo.copy()
    else:
        c = domain.params.get("center", np.zeros(dim))
        if domain.kind == "ellipsoid":
            c = np.zeros(dim)
        lo_b, hi_b = domain.bounding_box()
        half = np.ceil((hi_b - c) / h).astype(int) + 1
        shape = tuple(2 * half + 1)
        origin = c - half * h

    axes = [origin[d] + h * np.arange(shape[d]) for d in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    all_pts = np.stack([m.ravel() for m in mesh], axis=1)

    if domain.kind == "box":
        idx = np.unravel_index(np.arange(all_pts.shape[0]), shape)
        inner = np.ones(all_pts.shape[0], dtype=bool)
        for d in range(dim):
            inner &= (idx[d] > 0) & (idx[d] < shape[d] - 1)
        interior = inner
    else:
        interior = domain.r.values(all_pts) < 0.0
    int_flat = np.flatnonzero(interior)
    if int_flat.size == 0:
        raise SolveError("no interior nodes at this resolution")
    points = all_pts[int_flat]

    strides = np.array([int(np.prod(shape[d + 1:], dtype=np.int64))
                        for d in range(dim)])

    M = int_flat.size
    hp = np.ones((dim, M))
    hm = np.ones((dim, M))
    bval_p = np.zeros((dim, M))
    bval_m = np.zeros((dim, M))
    irr_p = np.zeros((dim, M), dtype=bool)
    irr_m = np.zeros((dim, M), dtype=bool)

    interior_mask = np.zeros(all_pts.shape[0], dtype=bool)
    interior_mask[int_flat] = True

    for d in range(dim):
        for sign, irr, arm, bval in ((+1, irr_p, hp, bval_p),
                                     (-1, irr_m, hm, bval_m)):
            nbr_flat = int_flat + sign * strides[d]
            outside = ~interior_mask[nbr_flat]
            irr[d] = outside
            if domain.kind == "box" or not np.any(outside):
                if np.any(outside) and domain.kind == "box":
                    # face node: full arm, exact data
                    bval[d][outside] = domain.phi.values(
                        all_pts[nbr_flat[outside]])
                continue
            theta = _crossing_fractions(domain, points[outside], d, sign, h)
            arm[d][outside] = theta
            cross = points[outside].copy()
            cross[:, d] += sign * theta * h
            bval[d][outside] = domain.phi.values(cross)

    # data at every non-interior node (box: exact; implicit: projected)
    ext_values = np.zeros(all_pts.shape[0])
    ext_idx = np.flatnonzero(~interior_mask)
    if domain.kind == "box":
        ext_values[ext_idx] = domain.phi.values(all_pts[ext_idx])
    else:
        ext_values[ext_idx] = domain.phi.values(
            domain.boundary_project(all_pts[ext_idx]))

    cross_pairs = [(4 * i + a, 4 * j + b)
                   for i in range(n) for j in range(i + 1, n)
                   for a in range(4) for b in range(4)]

    return Discretization(domain=domain, h=h, origin=origin, shape=shape,
                          int_flat=int_flat, points=points, strides=strides,
                          hp=hp, hm=hm, bval_p=bval_p, bval_m=bval_m,
                          irr_p=irr_p, irr_m=irr_m,
                          ext_values=ext_values.reshape(shape),
                          cross_pairs=cross_pairs)


def _crossing_fractions(domain, pts, axis, sign, h, iters: int = 60):
    """Bisection for theta in (0, 1] with r(p + sign*theta*h*e_axis) = 0."""
    lo = np.zeros(pts.shape[0])
    hi = np.ones(pts.shape[0])
    step = np.zeros(pts.shape[1])
    step[axis] = sign * h

    def rv(theta):
        return domain.r.values(pts + theta[:, None] * step)

    if np.any(rv(hi) < 0):
        raise SolveError("exterior neighbour has r < 0; lattice inconsistent")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = rv(mid) < 0
        lo[neg] = mid[neg]
        hi[~neg] = mid[~neg]
    return np.clip(0.5 * (lo + hi), THETA_MIN, 1.0)


# ----------------------------------------------------------------------
# Discrete hyperhermitian Hessians
# ----------------------------------------------------------------------

def _crossing_points(disc: Discretization, d: int, sign: int) -> np.ndarray:
    irr = disc.irr_p[d] if sign > 0 else disc.irr_m[d]
    arm = disc.hp[d] if sign > 0 else disc.hm[d]
    pts = disc.points[irr].copy()
    pts[:, d] += sign * arm[irr] * disc.h
    return pts


def _axis_second_diffs(disc: Discretization, U: np.ndarray, bc) -> np.ndarray:
    """(4n, M) corrected second differences along each real axis."""
    dim = 4 * disc.n
    flat = U.reshape(-1)
    c = flat[disc.int_flat]
    out = np.empty((dim, disc.num_interior))
    for d in range(dim):
        up = flat[disc.int_flat + disc.strides[d]].copy()
        dn = flat[disc.int_flat - disc.strides[d]].copy()
        if bc == "data":
            up[disc.irr_p[d]] = disc.bval_p[d][disc.irr_p[d]]
            dn[disc.irr_m[d]] = disc.bval_m[d][disc.irr_m[d]]
        elif bc == "zero":
            up[disc.irr_p[d]] = 0.0
            dn[disc.irr_m[d]] = 0.0
        else:  # analytic function supplying its own crossing values
            up[disc.irr_p[d]] = bc.values(_crossing_points(disc, d, +1))
            dn[disc.irr_m[d]] = bc.values(_crossing_points(disc, d, -1))
        a, b = disc.hp[d], disc.hm[d]
        out[d] = 2.0 * (up / (a * (a + b)) + dn / (b * (a + b)) - c / (a * b)) \
            / disc.h ** 2
    return out


def grid_hyper_hessians(disc: Discretization, u_int: np.ndarray,
                        bc="data") -> np.ndarray:
    """(M, n, n, 4) nodal hyperhermitian Hessians of the interior iterate.

    bc="data" evaluates with the Dirichlet data in place; bc="zero"
    treats the boundary as homogeneous (for linearization directions);
    an AnalyticFunction supplies exact values at crossings and ghosts.
    """
    n, dim = disc.n, 4 * disc.n
    if bc in ("data", "zero"):
        U = disc.full_from_interior(u_int, bc)
    else:
        axes = [disc.origin[d] + disc.h * np.arange(disc.shape[d])
                for d in range(dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        U = bc.values(np.stack([m.ravel() for m in mesh], axis=1)).reshape(disc.shape)
        U.flat[disc.int_flat] = u_int
    flat = U.reshape(-1)
    diag = _axis_second_diffs(disc, U, bc)
    H = np.zeros((disc.num_interior, dim, dim))
    H[:, np.arange(dim), np.arange(dim)] = diag.T
    for (a, b) in disc.cross_pairs:
        sa, sb = disc.strides[a], disc.strides[b]
        mixed = (flat[disc.int_flat + sa + sb] + flat[disc.int_flat - sa - sb]
                 - flat[disc.int_flat + sa - sb] - flat[disc.int_flat - sa + sb]) \
            / (4.0 * disc.h ** 2)
        H[:, a, b] = mixed
        H[:, b, a] = mixed
    return hyper_hessians_from_real(H, n)


def _min_eigs(hh: np.ndarray) -> np.ndarray:
    if hh.shape[1] == 1:
        return hh[:, 0, 0, 0]
    return eigenvalues_batch(hh)[:, 0]


# ----------------------------------------------------------------------
# Newton-Krylov solve
# ----------------------------------------------------------------------

@dataclass
class SolveConfig:
    tol: float = 1e-8            # sup-norm of the log-form residual
    max_newton: int = 50
    damping: float = 0.5         # backtracking factor
    min_step: float = 1e-6
    spsh_floor: float = 1e-6     # nodal Hessian eigenvalue floor
    krylov_rtol: float = 1e-6
    krylov_maxiter: int = 400
    initial: str = "auto"        # "auto" | "subsolution" | "poisson"
    seed: int = 0


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    final_residual: float
    min_eigenvalue: float
    num_interior: int
    h: float
    tol: float
    spsh_floor: float
    message: str = ""
    wall_time: float = 0.0
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "converged": self.converged, "iterations": self.iterations,
            "residual_history": list(map(float, self.residual_history)),
            "final_residual": self.final_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "num_interior": self.num_interior, "h": self.h, "tol": self.tol,
            "spsh_floor": self.spsh_floor, "message": self.message,
            "wall_time": self.wall_time, "checks": self.checks,
        }


@dataclass
class SolveResult:
    u: GridFunction              # full lattice (data values outside)
    u_interior: np.ndarray
    disc: Discretization
    report: SolveReport
    subsolution: Subsolution | None = None


def _rhs_values(disc: Discretization, u_int: np.ndarray) -> np.ndarray:
    return disc.domain.f.value(disc.points, u_int)


def _residual(disc, u_int, hh=None):
    """(G, det, hh) of the log-form residual; det <= 0 yields -inf entries."""
    if hh is None:
        hh = grid_hyper_hessians(disc, u_int, bc="data")
    det = moore_det_batch(hh)
    f = _rhs_values(disc, u_int)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(det > 0, np.log(np.maximum(det, 1e-300)) - np.log(f), -np.inf)
    return G, det, hh


def linearized_apply(disc: Discretization, u_int: np.ndarray, v) -> np.ndarray:
    """L v = n f^{-1} det(hess v, hess u[n-1]) - f^{-1} f_u v nodewise.

    The linearization of the equation about u; at a solution (det = f)
    this coincides with the exact derivative of the log-form residual,
    which the Newton iteration uses with the det(hess u) normalization.
    ``v`` is either an interior vector (zero boundary perturbation) or
    an AnalyticFunction carrying its own boundary values.
    """
    hh_u = grid_hyper_hessians(disc, u_int, bc="data")
    if isinstance(v, np.ndarray):
        v_int = v
        hh_v = grid_hyper_hessians(disc, v_int, bc="zero")
    else:
        v_int = v.values(disc.points)
        hh_v = grid_hyper_hessians(disc, v_int, bc=v)
    f = _rhs_values(disc, u_int)
    fu = disc.domain.f.du(disc.points, u_int)
    mixed = mixed_with_repeats_batch(hh_v, hh_u)
    return disc.n * mixed / f - (fu / f) * v_int


def _linear_operator(disc, u_int, hh_u, det_u):
    """Exact Jacobian of the log-form residual as a LinearOperator, plus
    a Jacobi preconditioner built from the stencil diagonal."""
    n = disc.n
    M = disc.num_interior
    f = _rhs_values(disc, u_int)
    fu = disc.domain.f.du(disc.points, u_int)

    def matvec(v):
        hh_v = grid_hyper_hessians(disc, v, bc="zero")
        mixed = mixed_with_repeats_batch(hh_v, hh_u)
        return n * mixed / det_u - (fu / f) * v

    # hessian of the nodal delta function: diagonal -2/(hp*hm*h^2) per axis
    diag_axis = -2.0 / (disc.hp * disc.hm * disc.h ** 2)   # (4n, M)
    D = np.zeros((M, n, n, 4))
    for i in range(n):
        D[:, i, i, 0] = np.sum(diag_axis[4 * i:4 * i + 4], axis=0)
    jac_diag = n * mixed_with_repeats_batch(D, hh_u) / det_u - fu / f
    jac_diag = np.where(np.abs(jac_diag) > 1e-300, jac_diag, 1.0)

    A = spla.LinearOperator((M, M), matvec=matvec)
    Pinv = spla.LinearOperator((M, M), matvec=lambda x: x / jac_diag)
    return A, Pinv


def initial_guess(disc: Discretization, config: SolveConfig):
    """Subsolution restriction (implicit domains) or a Poisson fill-in;
    "bumped" perturbs the subsolution by a psh term vanishing on the
    boundary (distinct spsh start for uniqueness probes)."""
    strategy = config.initial
    if strategy == "auto":
        strategy = "subsolution" if disc.domain.r is not None else "poisson"
    if strategy in ("subsolution", "bumped"):
        sub = build_subsolution(disc.domain, seed=config.seed)
        u0 = sub.fn.values(disc.points)
        if strategy == "bumped":
            u0 = u0 + 0.1 * disc.domain.r.values(disc.points)
        return u0, sub
    if strategy == "poisson":
        # trace heuristic: det ~ f matches laplacian ~ n f^{1/n}
        A, b = assemble_laplacian(disc)
        fbar = float(np.mean(_rhs_values(disc, np.zeros(disc.num_interior))))
        rhs = np.full(disc.num_interior, disc.n * fbar ** (1.0 / disc.n)) - b
        return spla.spsolve(A.tocsc(), rhs), None
    raise ValueError(f"unknown initial-guess strategy {strategy!r}")


def solve_dirichlet(domain: DomainSpec, h: float,
                    config: SolveConfig | None = None) -> SolveResult:
    config = config or SolveConfig()
    t0 = time.perf_counter()
    disc = discretize(domain, h)
    u, sub = initial_guess(disc, config)

    G, det, hh = _residual(disc, u)
    eigs = _min_eigs(hh)
    if np.any(det <= 0) or float(np.min(eigs)) < config.spsh_floor:
        worst = int(np.argmin(eigs))
        raise SolveError(
            "initial guess is not strictly psh on the lattice: eigenvalue "
            f"{eigs[worst]:.3e} at node {disc.points[worst].tolist()}")
    res = float(np.max(np.abs(G)))
    history = [res]
    message = ""
    converged = False

    it = 0
    for it in range(1, config.max_newton + 1):
        if res <= config.tol:
            converged = True
            it -= 1
            break
        A, Pinv = _linear_operator(disc, u, hh, det)
        delta, info = spla.lgmres(A, -G, M=Pinv,
                                  rtol=config.krylov_rtol, atol=0.0,
                                  maxiter=config.krylov_maxiter)
        if info != 0:
            message = f"krylov stagnated (info={info}) at newton step {it}"
            break
        t = 1.0
        accepted = False
        while t >= config.min_step:
            u_try = u + t * delta
            G_t, det_t, hh_t = _residual(disc, u_try)
            ok_spsh = np.all(det_t > 0) and \
                float(np.min(_min_eigs(hh_t))) >= config.spsh_floor
            if ok_spsh and float(np.max(np.abs(G_t))) < res:
                u, G, det, hh = u_try, G_t, det_t, hh_t
                res = float(np.max(np.abs(G)))
                accepted = True
                break
            t *= config.damping
        if not accepted:
            message = f"backtracking failed at newton step {it}"
            break
        history.append(res)
    else:
        it = config.max_newton
    if not converged and res <= config.tol:
        converged = True
    if not converged and not message:
        message = f"newton budget exhausted at residual {res:.3e}"

    report = SolveReport(converged=converged, iterations=it,
                         residual_history=history, final_residual=res,
                         min_eigenvalue=float(np.min(_min_eigs(hh))),
                         num_interior=disc.num_interior, h=h,
                         tol=config.tol, spsh_floor=config.spsh_floor,
                         message=message,
                         wall_time=time.perf_counter() - t0)
    U = disc.full_from_interior(u, bc="data")
    grid = GridFunction(domain.n, U, h, disc.origin)
    return SolveResult(u=grid, u_interior=u, disc=disc, report=report,
                       subsolution=sub)


# ----------------------------------------------------------------------
# Assembled Laplacian (oracles: Poisson equivalence, harmonic extension)
# ----------------------------------------------------------------------

def assemble_laplacian(disc: Discretization):
    """Sparse A and offset b with (laplacian_h u)_interior = A u_int + b,
    using the same boundary-crossing corrections as the solver."""
    M = disc.num_interior
    dim = 4 * disc.n
    pos = np.full(int(np.prod(disc.shape)), -1, dtype=np.int64)
    pos[disc.int_flat] = np.arange(M)
    rows, cols, vals = [], [], []
    b = np.zeros(M)
    inv_h2 = 1.0 / disc.h ** 2
    for d in range(dim):
        a_arm, b_arm = disc.hp[d], disc.hm[d]
        c_up = 2.0 / (a_arm * (a_arm + b_arm)) * inv_h2
        c_dn = 2.0 / (b_arm * (a_arm + b_arm)) * inv_h2
        c_ct = -2.0 / (a_arm * b_arm) * inv_h2
        rows.append(np.arange(M)); cols.append(np.arange(M)); vals.append(c_ct)
        for sign, irr, coef, bval in ((+1, disc.irr_p[d], c_up, disc.bval_p[d]),
                                      (-1, disc.irr_m[d], c_dn, disc.bval_m[d])):
            nbr = pos[disc.int_flat + sign * disc.strides[d]]
            reg = ~irr
            rows.append(np.flatnonzero(reg))
            cols.append(nbr[reg])
            vals.append(coef[reg])
            b[irr] += coef[irr] * bval[irr]
    A = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(M, M)).tocsr()
    return A, b


def poisson_solve(disc: Discretization, f_vals: np.ndarray) -> np.ndarray:
    """Interior solution of laplacian_h u = f with the Dirichlet data."""
    A, b = assemble_laplacian(disc)
    return spla.spsolve(A.tocsc(), np.asarray(f_vals) - b)


def harmonic_extension(disc: Discretization) -> np.ndarray:
    """Discrete harmonic interior extension of the boundary data."""
    return poisson_solve(disc, np.zeros(disc.num_interior))


# ----------------------------------------------------------------------
# Structural runtime checks
# ----------------------------------------------------------------------

def minimum_principle_check(disc: Discretization, u_int: np.ndarray,
                            v_int: np.ndarray, u_bnd: np.ndarray,
                            v_bnd: np.ndarray, slack: float | None = None,
                            check_applicability: bool = True) -> dict:
    """min(u - v) over the closed lattice should be attained on the
    boundary when det(hess u) <= det(hess v) nodewise (v the subsolution
    candidate); reported with an O(h^2) slack.

    The determinant precondition is verified on the lattice (with the
    same slack scale) and the result flagged inapplicable if it fails.
    """
    if slack is None:
        slack = 1e-8 + 10.0 * disc.h ** 2
    interior_min = float(np.min(u_int - v_int))
    boundary_min = float(np.min(np.asarray(u_bnd) - np.asarray(v_bnd)))
    out = {"interior_min": interior_min, "boundary_min": boundary_min,
           "slack": slack, "holds": interior_min >= boundary_min - slack}
    if check_applicability:
        det_u = moore_det_batch(grid_hyper_hessians(disc, u_int, bc="data"))
        det_v = moore_det_batch(grid_hyper_hessians(disc, v_int, bc="data"))
        gap = float(np.min(det_v - det_u))
        scale = 1.0 + float(np.max(np.abs(det_v)))
        out["det_gap"] = gap
        out["applicable"] = gap >= -slack * scale
    return out


def barrier_bounds_check(result: SolveResult, slack: float | None = None) -> dict:
    """Subsolution <= u <= harmonic extension of the data (up to slack).

    The upper bound uses that psh iterates are subharmonic; the lower
    bound is the comparison with the verified subsolution.  Only defined
    when a subsolution was constructed (implicit domains).
    """
    disc = result.disc
    if slack is None:
        slack = 1e-8 + 10.0 * disc.h ** 2
    out = {"slack": slack}
    hext = harmonic_extension(disc)
    upper_gap = float(np.min(hext - result.u_interior))
    out["upper_gap"] = upper_gap
    out["upper_ok"] = upper_gap >= -slack
    if result.subsolution is not None:
        lower = result.subsolution.fn.values(disc.points)
        lower_gap = float(np.min(result.u_interior - lower))
        out["lower_gap"] = lower_gap
        out["lower_ok"] = lower_gap >= -slack
        out["holds"] = out["upper_ok"] and out["lower_ok"]
    else:
        out["holds"] = out["upper_ok"]
    return out


def uniqueness_check(domain: DomainSpec, h: float,
                     config: SolveConfig | None = None) -> dict:
    """Solve from two different initial guesses; the iterates must meet."""
    config = config or SolveConfig()
    strategies = (("subsolution", "bumped") if domain.r is not None
                  else ("poisson", "poisson"))
    sols = []
    for i, strat in enumerate(strategies):
        cfg = SolveConfig(**{**config.__dict__, "initial": strat,
                             "seed": config.seed + i})
        sols.append(solve_dirichlet(domain, h, cfg))
    gap = float(np.max(np.abs(sols[0].u_interior - sols[1].u_interior)))
    tol = 10.0 * config.tol
    return {"gap": gap, "tol": tol, "holds": gap <= tol,
            "converged": all(s.report.converged for s in sols)}


def load_problem(path) -> DomainSpec:
    with open(path) as fh:
        return DomainSpec.from_json(json.load(fh))
