"""Command-line interface: ``regnmf {factorize,simulate,qp}``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import RegNMFError, ValidationError
from .nmf import NmfOptions, factorize
from .postprocess import canonicalize, r_squared
from .qp import QpSolveOptions, StepStrategy, giqpm_solve
from .simulate import SCENARIOS, run_simulation, summarize
from .weights import QpProblem, ScalarWeights, WeightConfig, expand_scalar_weights

logger = logging.getLogger("regnmf")


def _add_solver_flags(p):
    p.add_argument("--method", choices=("mur", "aur"), default="aur")
    p.add_argument("--l1-l", type=float, default=0.0, help="L1 penalty on L")
    p.add_argument("--l1-r", type=float, default=0.0, help="L1 penalty on R")
    p.add_argument("--l2-l", type=float, default=0.0, help="ridge penalty on L")
    p.add_argument("--l2-r", type=float, default=0.0, help="ridge penalty on R")
    p.add_argument("--ortho-l", type=float, default=0.0, help="non-orthogonality penalty on L")
    p.add_argument("--ortho-r", type=float, default=0.0, help="non-orthogonality penalty on R")
    p.add_argument("--epsilon", type=float, default=None,
                   help="MUR numerator clip (default 1e-7*mean|Y|)")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--step-mode", choices=("optimal", "full"), default="optimal")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-9, help="relative objective decrease tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-zero-escape", action="store_true",
                   help="AUR: only revive zero entries whose F is also zero")


def build_parser():
    parser = argparse.ArgumentParser(prog="regnmf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="factorize a non-negative matrix")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True, help="output directory")
    p.add_argument("--format", choices=("dense_csv", "triplet_csv"), default="dense_csv")
    p.add_argument("--shape", type=int, nargs=2, metavar=("ROWS", "COLS"),
                   help="matrix shape for triplet input")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--init-sparsity", type=float, default=0.0)
    p.add_argument("--row-normalize", action="store_true", help="scale rows of Y to sum to 1")
    p.add_argument("--row-weights", type=Path, help="diagonal of W0R (vector file)")
    p.add_argument("--col-weights", type=Path, help="diagonal of W0C (vector file)")
    _add_solver_flags(p)

    p = sub.add_parser("simulate", help="compare MUR and AUR on exact synthetic data")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="A")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--true-rank", type=int)
    p.add_argument("--rank", "--fit-rank", dest="fit_rank", type=int)
    p.add_argument("--init-sparsity", "--sparsity", dest="sparsity", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1,
                   help="run seeds seed..seed+repeats-1, each in its own subdirectory")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--tau", type=float, default=0.5)

    p = sub.add_parser("qp", help="solve min 1/2 x'Gx + d'x s.t. x >= 0")
    p.add_argument("--G", dest="g", type=Path, required=True, help="dense CSV matrix")
    p.add_argument("--d", dest="d", type=Path, required=True, help="vector file")
    p.add_argument("--x0", type=Path, help="starting point (vector file)")
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--strategy", choices=[s.value for s in StepStrategy] + ["steepest"],
                   default="scaled_gradient")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zero-escape", action="store_true")
    return parser


def _weights(args, y, rank):
    scalars = ScalarWeights(args.l1_l, args.l1_r, args.l2_l, args.l2_r,
                            args.ortho_l, args.ortho_r)
    if args.row_weights is None and args.col_weights is None:
        return scalars
    w = expand_scalar_weights(scalars, y.shape[0], y.shape[1], rank)
    w0r, w0c = w.w0r, w.w0c
    if args.row_weights is not None:
        w0r = np.diag(io.load_vector(args.row_weights))
    if args.col_weights is not None:
        w0c = np.diag(io.load_vector(args.col_weights))
    return WeightConfig(w0r, w0c, w.w1l, w.w1r, w.l2_terms_l, w.l2_terms_r)


def cmd_factorize(args):
    y = io.load_matrix(args.input, args.format,
                       tuple(args.shape) if args.shape else None, nonnegative=True)
    if args.row_normalize:
        sums = y.sum(axis=1, keepdims=True)
        y = np.divide(y, sums, out=np.zeros_like(y), where=sums > 0)
    opts = NmfOptions(rank=args.rank, weights=_weights(args, y, args.rank), method=args.method,
                      epsilon=args.epsilon, tau=args.tau, step_mode=args.step_mode,
                      max_iters=args.max_iters, rel_tol=args.tol, seed=args.seed,
                      init_sparsity=args.init_sparsity,
                      zero_escape=not args.no_zero_escape)
    res = factorize(y, opts)
    canon = canonicalize(res.factors)
    try:
        r2 = r_squared(y, res.factors)
    except RegNMFError:
        r2 = float("nan")
    summary = {
        "method": args.method,
        "rank": args.rank,
        "iterations": res.iterations,
        "status": res.status.value,
        "objective": res.objective,
        "frob_error": res.frob_error,
        "r_squared": r2,
    }
    out = args.out
    io.write_matrix(out / "factors_L.csv", canon.factors.l)
    io.write_matrix(out / "factors_R.csv", canon.factors.r)
    io.write_trace(out / "trace.csv", res.trace)
    io.write_summary(out / "summary.txt", summary)
    for k, v in summary.items():
        print(f"{k}={v if isinstance(v, str) else io.fmt(v)}")
    return 0


def cmd_simulate(args):
    params = dict(SCENARIOS[args.scenario])
    for key in ("rows", "cols", "true_rank", "fit_rank", "sparsity"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if not 0.0 <= params["sparsity"] <= 1.0:
        raise ValidationError("sparsity must lie in [0, 1]")
    for i in range(args.repeats):
        seed = args.seed + i
        sim = run_simulation(seed=seed, max_iters=args.max_iters, rel_tol=args.tol,
                             tau=args.tau, **params)
        out = args.out if args.repeats == 1 else args.out / f"seed_{seed}"
        for (method, start), res in sim.runs.items():
            io.write_trace(out / f"trace_{method}_{start}.csv", res.trace)
        summary = {"scenario": args.scenario, **params, **summarize(sim)}
        io.write_summary(out / "summary.txt", summary)
        logger.info("seed %d written to %s", seed, out)
    return 0


def cmd_qp(args):
    g = io.load_matrix(args.g)
    d = io.load_vector(args.d)
    if g.shape[0] != g.shape[1]:
        raise ValidationError(f"G must be square, got {g.shape}")
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-9 * scale:
        raise ValidationError("G is not symmetric")
    qp = QpProblem(g=0.5 * (g + g.T), dvec=d)
    strategy = "steepest_descent" if args.strategy == "steepest" else args.strategy
    opts = QpSolveOptions(max_iters=args.max_iters, rel_tol=args.tol, tau=args.tau,
                          strategy=strategy, seed=args.seed, zero_escape=args.zero_escape)
    x0 = io.load_vector(args.x0) if args.x0 else None
    res = giqpm_solve(qp, opts, x0)
    summary = {
        "strategy": res.strategy.value,
        "status": res.status.value,
        "iterations": res.trace[-1].iter,
        "objective": res.trace[-1].objective,
    }
    io.write_matrix(args.out / "solution.csv", res.x.reshape(-1, 1))
    io.write_trace(args.out / "trace.csv", res.trace, io.QP_TRACE_COLUMNS)
    io.write_summary(args.out / "summary.txt", summary)
    for k, v in summary.items():
        print(f"{k}={v if isinstance(v, str) else io.fmt(v)}")
    return 0


COMMANDS = {"factorize": cmd_factorize, "simulate": cmd_simulate, "qp": cmd_qp}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RegNMFError, OSError, ValueError) as exc:
        print(f"regnmf {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
