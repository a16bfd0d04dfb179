"""Command-line entry point.

One binary with subcommands ``det``, ``hessian``, ``mixdisc``,
``check-identities``, ``subsolution``, ``solve`` and ``report``.  Every
emitted report embeds a run manifest (subcommand, inputs, parameters,
seed, outputs) so each number is reproducible; identical manifests
produce byte-identical reports.  Exit codes: 0 success, 1 verification
failure, 2 usage error or malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path


def _thread_cap():
    cap = os.environ.get("HYPERMA_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)
    return int(cap) if cap else None


_THREADS = _thread_cap()  # must run before numpy initializes its pools

import numpy as np  # noqa: E402

from .analytic import function_from_spec  # noqa: E402
from .domain import (DomainSpec, SubsolutionError, build_subsolution,  # noqa: E402
                     verify_subsolution)
from .hypermat import HyperHermitianMatrix, QuatMatrix, moore_det  # noqa: E402
from .mixdisc import mixed_discriminant, run_identity_suite  # noqa: E402
from .qcalc import hyper_hessian, ma_operator, min_eigenvalue  # noqa: E402
from .solver import (SolveConfig, SolveError, barrier_bounds_check,  # noqa: E402
                     minimum_principle_check, solve_dirichlet)


class UsageError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")


def _load_matrix(path) -> QuatMatrix:
    data = _load_json(path)
    try:
        return QuatMatrix.from_json(data)
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"{path}: malformed matrix: {e}")


def _manifest(args, inputs, outputs, params):
    return {
        "subcommand": args.cmd,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "params": params,
        "seed": getattr(args, "seed", None),
        "threads": _THREADS,
    }


def _emit(payload: dict, out_path):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text + "\n")
    else:
        print(text)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_det(args):
    A = _load_matrix(args.matrix)
    value = moore_det(A)
    if args.out:
        _emit({"manifest": _manifest(args, [args.matrix], [args.out], {}),
               "moore_det": value}, args.out)
    else:
        print(repr(value))
    return 0


def cmd_hessian(args):
    data = _load_json(args.function)
    try:
        n = int(data["n"])
        fn = function_from_spec(data, n)
    except (KeyError, ValueError) as e:
        raise UsageError(f"{args.function}: malformed function spec: {e}")
    at = np.zeros(4 * n) if args.at is None else \
        np.array([float(v) for v in args.at.split(",")])
    if at.shape != (4 * n,):
        raise UsageError(f"--at needs {4 * n} comma-separated coordinates")
    H = hyper_hessian(fn, at)
    payload = {
        "manifest": _manifest(args, [args.function], [args.out] if args.out else [],
                              {"at": at.tolist()}),
        "hessian": H.to_json(),
        "moore_det": ma_operator(fn, at),
        "min_eigenvalue": min_eigenvalue(fn, at),
    }
    payload["psh_at_point"] = payload["min_eigenvalue"] >= -1e-10
    _emit(payload, args.out)
    return 0


def cmd_mixdisc(args):
    mats = [_load_matrix(p) for p in args.matrices]
    n = mats[0].n
    if any(m.n != n for m in mats) or len(mats) != n:
        raise UsageError(f"mixed discriminant of n x n matrices needs exactly "
                         f"n = {n} arguments of matching size")
    hyper = [HyperHermitianMatrix(m.q) for m in mats]
    value = mixed_discriminant(hyper)
    if args.out:
        _emit({"manifest": _manifest(args, list(args.matrices), [args.out], {}),
               "mixed_discriminant": value}, args.out)
    else:
        print(repr(value))
    return 0


def cmd_check_identities(args):
    report = run_identity_suite(n=args.n, samples=args.samples, seed=args.seed)
    payload = {
        "manifest": _manifest(args, [], [args.out] if args.out else [],
                              {"n": args.n, "samples": args.samples}),
        "results": report,
    }
    _emit(payload, args.out)
    return 0 if report["total_failures"] == 0 else 1


def cmd_subsolution(args):
    domain = DomainSpec.from_json(_load_json(args.problem))
    sub = build_subsolution(domain, samples=args.samples, seed=args.seed)
    report = verify_subsolution(sub, n_interior=10000, n_boundary=1000,
                                seed=args.seed)
    payload = {
        "manifest": _manifest(args, [args.problem],
                              [p for p in (args.out, args.report) if p],
                              {"samples": args.samples}),
        "subsolution": report,
    }
    _emit(payload, args.report or args.out)
    return 0 if report["passed"] else 1


def cmd_solve(args):
    domain = DomainSpec.from_json(_load_json(args.problem))
    config = SolveConfig(tol=args.tol, seed=args.seed)
    result = solve_dirichlet(domain, args.h, config)
    report = result.report.to_json()
    # wall time varies run to run; reports must be byte-reproducible
    report.pop("wall_time", None)

    if result.subsolution is not None:
        sub_vals = result.subsolution.fn.values(result.disc.points)
        bnd = np.zeros(2)  # both equal phi on the boundary crossings
        report["checks"]["minimum_principle"] = minimum_principle_check(
            result.disc, result.u_interior, sub_vals, bnd, bnd)
        report["checks"]["barrier_bounds"] = barrier_bounds_check(result)
        report["subsolution"] = {"k": result.subsolution.k,
                                 "s": result.subsolution.s}
    if domain.exact is not None:
        exact = domain.exact.values(result.disc.points)
        diff = result.u_interior - exact
        report["error_max"] = float(np.max(np.abs(diff)))
        report["error_rms"] = float(np.sqrt(np.mean(diff ** 2)))

    outputs = [p for p in (args.out, args.report) if p]
    report["manifest"] = _manifest(args, [args.problem], outputs,
                                   {"h": args.h, "tol": args.tol})
    if args.out:
        result.u.save(args.out)
    _emit(report, args.report)
    checks_ok = all(c.get("holds", True) for c in report["checks"].values())
    return 0 if (result.report.converged and checks_ok) else 1


def cmd_report(args):
    data = _load_json(args.report)
    history = data.get("residual_history")
    if history is None:
        raise UsageError(f"{args.report}: no residual_history to flatten")
    rows = [("step", "residual")] + list(enumerate(history))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerows(rows)
    return 0


# ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="hyperma",
                                description="quaternionic Monge-Ampere toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    d = sub.add_parser("det", help="Moore determinant of a matrix JSON file")
    d.add_argument("matrix")
    d.add_argument("--out")
    d.set_defaults(fn=cmd_det)

    h = sub.add_parser("hessian", help="hyperhermitian Hessian of a function spec")
    h.add_argument("function")
    h.add_argument("--at", help="comma-separated point coordinates (default 0)")
    h.add_argument("--out")
    h.set_defaults(fn=cmd_hessian)

    m = sub.add_parser("mixdisc", help="mixed discriminant of n matrices")
    m.add_argument("matrices", nargs="+")
    m.add_argument("--out")
    m.set_defaults(fn=cmd_mixdisc)

    c = sub.add_parser("check-identities", help="randomized identity suite")
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_check_identities)

    s = sub.add_parser("subsolution", help="build and verify a subsolution")
    s.add_argument("problem")
    s.add_argument("--samples", type=int, default=4096)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--report")
    s.set_defaults(fn=cmd_subsolution)

    so = sub.add_parser("solve", help="solve the Dirichlet problem on a lattice")
    so.add_argument("problem")
    so.add_argument("--h", type=float, required=True)
    so.add_argument("--tol", type=float, default=1e-8)
    so.add_argument("--seed", type=int, default=0)
    so.add_argument("--out", help="grid output path (JSON header + .bin sidecar)")
    so.add_argument("--report", help="report JSON path (default stdout)")
    so.set_defaults(fn=cmd_solve)

    r = sub.add_parser("report", help="flatten a report's residual history")
    r.add_argument("report")
    r.add_argument("--csv")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SubsolutionError, SolveError) as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as e:
        print(f"error: malformed input: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
