"""``facegeo`` command line.

Exit codes: 0 success, 1 input or validation error, 2 non-convergence or a
failed verification when ``--strict`` is given.  Every file output is written
atomically, and every JSON document carries ``format_version``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .experiments import (
    COLUMNS,
    inequality_sweep,
    load_config,
    records_to_csv,
    recovery_probability,
    sweep_summary,
    vertex_scan,
)
from .faces import SupportPattern, check_extreme_inequality, minimal_face_dimension
from .formats import (
    MATRIX_FORMAT_VERSION,
    REPORT_FORMAT_VERSION,
    FormatError,
    atomic_write,
    format_matrix,
    read_matrix,
    read_ops,
    read_vector,
)
from .linalg import Tolerances
from .manifold import PatternGraph, component_count, manifold_dimension, subspace_lower_bound
from .mesh import KINDS, mesh_ball
from .polyhedral import SUITES, PolytopeError, run_suite
from .solvers import InfeasibleError, LinearMap, SolverConfig, extreme_point_refine, solve_affine_recovery


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def build_parser():
    p = _Parser(prog="facegeo", description="Facial geometry of the rank-sparsity ball.")
    p.add_argument("--version", action="store_true", help="print toolkit and format versions")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("certify", help="certify the minimal face at a matrix")
    c.add_argument("--input", required=True)
    c.add_argument("--theta", type=_positive_float, default=1.0)
    c.add_argument("--rank-tol", type=_positive_float, default=1e-8)
    c.add_argument("--zero-tol", type=_positive_float, default=1e-10)
    c.add_argument("--span-tol", type=_positive_float, default=1e-8)
    c.add_argument("--report")

    m = sub.add_parser("manifold", help="dimension of the diagonal-scaling orbit of a pattern")
    m.add_argument("--pattern", required=True)
    m.add_argument("--report")

    o = sub.add_parser("oracle", help="randomized facial-calculus suites on polytopes")
    o.add_argument("--suite", required=True, choices=SUITES)
    o.add_argument("--dim", type=int, default=3, choices=(2, 3, 4))
    o.add_argument("--trials", type=_positive_int, default=50)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--report")
    o.add_argument("--strict", action="store_true")

    s = sub.add_parser("solve", help="sparse low-rank recovery from linear measurements")
    s.add_argument("--A", dest="ops", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--theta", type=_positive_float, default=1.0)
    s.add_argument("--refine", action="store_true")
    s.add_argument("--refine-method", choices=("face", "dr"), default="face")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=_positive_int, default=20000)
    s.add_argument("--abs-tol", type=_positive_float, default=1e-9)
    s.add_argument("--rel-tol", type=_positive_float, default=1e-7)
    s.add_argument("--rho", type=_positive_float, default=1.0)
    s.add_argument("--use-range-rank", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--report")
    s.add_argument("--strict", action="store_true")

    e = sub.add_parser("experiment", help="seeded Monte-Carlo experiments")
    e.add_argument("kind", choices=("sweep", "recovery", "vertex-scan"))
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--summary")
    e.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    e.add_argument("--strict", action="store_true")

    h = sub.add_parser("mesh", help="triangle mesh of a ball on symmetric 2x2 matrices")
    h.add_argument("--kind", choices=KINDS, default="joint")
    h.add_argument("--theta", type=_positive_float, default=1.0)
    h.add_argument("--resolution", type=int, default=64)
    h.add_argument("--out", required=True)
    return p


def _dump(doc):
    return json.dumps(doc, indent=2) + "\n"


def _emit(doc, path):
    text = _dump(doc)
    if path:
        atomic_write(path, text)
    sys.stdout.write(text)


def cmd_certify(args):
    X = read_matrix(args.input)
    tol = Tolerances(rank_rel=args.rank_tol, zero_abs=args.zero_tol, span_rel=args.span_tol)
    report = minimal_face_dimension(X, args.theta, tol)
    _emit(report.to_dict(), args.report)
    return 0


def cmd_manifold(args):
    P = read_matrix(args.pattern)
    if not np.all((P == 0) | (P == 1)):
        raise ValueError(f"{args.pattern}: pattern entries must be 0 or 1")
    pattern = SupportPattern(zero_mask=P == 0)
    n, m = P.shape
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "n": n,
        "m": m,
        "components": component_count(PatternGraph.from_pattern(pattern)),
        "manifold_dim": manifold_dimension(pattern),
        "subspace_lower_bound": subspace_lower_bound(P),
    }
    _emit(doc, args.report)
    return 0


def cmd_oracle(args):
    result = run_suite(args.suite, dim=args.dim, trials=args.trials, seed=args.seed)
    doc = {"format_version": REPORT_FORMAT_VERSION, **result}
    status = "PASS" if result["passed"] else "FAIL"
    print(f"{status} suite={args.suite} dim={args.dim} trials={result['trials']} failures={result['failures']}", file=sys.stderr)
    _emit(doc, args.report)
    return 2 if args.strict and not result["passed"] else 0


def cmd_solve(args):
    ops = read_ops(args.ops)
    b = read_vector(args.b)
    if len(ops) != b.size:
        raise ValueError(f"{len(ops)} measurement matrices but {b.size} right-hand side values")
    A = LinearMap(ops, b)
    cfg = SolverConfig(max_iter=args.max_iter, abs_tol=args.abs_tol, rel_tol=args.rel_tol, rho=args.rho, seed=args.seed)
    res = solve_affine_recovery(A, args.theta, cfg)
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "theta": args.theta,
        "d": A.d,
        "range_rank": A.range_rank,
        "objective": res.objective,
        "primal_residual": res.primal_residual,
        "dual_residual": res.dual_residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "feasibility": A.residual(res.X),
        "X": format_matrix(res.X),
    }
    X = res.X
    converged = res.converged
    if args.refine:
        W = np.random.default_rng(args.seed).standard_normal(A.shape)
        ref = extreme_point_refine(
            A, args.theta, res.objective, W, cfg, start=res.X, method=args.refine_method, hint=res.info.get("hint")
        )
        X = ref.X
        converged = converged and ref.converged
        doc["refine"] = {
            "method": args.refine_method,
            "seed": args.seed,
            "objective": ref.objective,
            "feasibility": ref.primal_residual,
            "objective_excess": ref.dual_residual,
            "iterations": ref.iterations,
            "converged": ref.converged,
            "X": format_matrix(X),
        }
    report = minimal_face_dimension(X, args.theta)
    bound = A.range_rank if args.use_range_rank else A.d
    doc["face"] = report.to_dict()
    doc["inequality_bound"] = bound
    doc["inequality_ok"] = check_extreme_inequality(report, bound)
    _emit(doc, args.report)
    if not converged:
        print("facegeo: warning: solver did not converge", file=sys.stderr)
        return 2 if args.strict else 0
    return 0


def cmd_experiment(args):
    cfg = load_config(args.config, args.kind)
    if args.kind == "sweep":
        records = inequality_sweep(cfg, threads=args.threads)
        summary = sweep_summary(records)
        failed = summary["violations"] > 0 or summary["converged_fraction"] < 0.95
    elif args.kind == "recovery":
        out = recovery_probability(cfg, threads=args.threads)
        records = out.pop("records")
        summary = out
        failed = not out["passed"]
    else:
        out = vertex_scan(cfg, threads=args.threads)
        records = out["records"]
        summary = {
            "samples": len(records),
            "hits": len(out["hits"]),
            "mismatches": len(out["mismatches"]),
            "passed": out["passed"],
        }
        failed = not out["passed"]
    atomic_write(args.out, records_to_csv(records, COLUMNS[args.kind]))
    doc = {"format_version": REPORT_FORMAT_VERSION, "experiment": args.kind, "seed": cfg.seed, **summary}
    _emit(doc, args.summary)
    return 2 if args.strict and failed else 0


def cmd_mesh(args):
    mesh = mesh_ball(args.kind, args.theta, args.resolution)
    atomic_write(args.out, mesh.to_obj())
    print(f"wrote {len(mesh.vertices)} vertices and {len(mesh.faces)} faces to {args.out}", file=sys.stderr)
    return 0


COMMANDS = {
    "certify": cmd_certify,
    "manifold": cmd_manifold,
    "oracle": cmd_oracle,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "mesh": cmd_mesh,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.version:
            print(f"facegeo {__version__} (matrix format {MATRIX_FORMAT_VERSION}, report format {REPORT_FORMAT_VERSION})")
            return 0
        if not args.command:
            raise UsageError(parser.format_usage() + "facegeo: error: a subcommand is required")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (FormatError, InfeasibleError, PolytopeError, ValueError, OSError) as exc:
        print(f"facegeo: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
