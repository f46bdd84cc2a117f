"""Command-line front-end: ``mmwbeam {solve,reproduce,oracle,gen}``.

Exit codes: 0 success, 1 usage or input error, 2 solver did not converge
(the result is still written).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .channel import BlockPartition, FixtureError, random_gaussian_tensor, tensor_from_json, tensor_to_json
from .harness import (SCHEMA_VERSION, GridOracleSpec, GridTooLarge, compare_ensembles, figure3_specs,
                      figure6_specs, grid_oracle, run_ensemble)
from .mimo import als_shared, als_split_tensor
from .siso import SolverConfig, als_tensor, hopm, power_method

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2
MIN_REPRODUCE_TRIALS = 100


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_at_least(lo):
    def conv(text):
        try:
            val = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if val < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {val}")
        return val
    return conv


def _positive_float(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return val


def _seed(text):
    val = _int_at_least(0)(text)
    if val >= 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return val


def _pair(text):
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers 'N1,M1', got {text!r}") from None
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError(f"block sizes must be >= 1, got {text}")
    return a, b


def _add_solver_flags(p):
    p.add_argument("--iters", type=_int_at_least(1), default=8, help="outer iterations (default 8)")
    p.add_argument("--tol", type=_positive_float, default=1e-9, help="relative objective tolerance")
    p.add_argument("--restarts", type=_int_at_least(0), default=0, help="extra random starts")
    p.add_argument("--inner", type=_int_at_least(1), default=None,
                   help="cap the nested rank-1 fits at this many power steps (default: exact)")


def _add_channel_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--in", dest="infile", metavar="PATH", help="channel fixture (JSON)")
    src.add_argument("--gen", choices=("matrix", "tensor"), help="draw a Gaussian channel")
    p.add_argument("--n", type=_int_at_least(1), default=16, help="transmit antennas")
    p.add_argument("--m", type=_int_at_least(1), default=16, help="receive antennas")
    p.add_argument("--p", type=_int_at_least(1), default=2, help="timing indices (tensor only)")
    p.add_argument("--seed", type=_seed, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmwbeam", description="Analog beamforming for matrix and tensor channels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="beamform one channel")
    _add_channel_flags(p)
    p.add_argument("--alg", required=True, choices=("power", "als", "hopm", "als-shared", "als-split"))
    p.add_argument("--k", type=_int_at_least(1), default=2, help="streams for als-shared")
    p.add_argument("--split", type=_pair, default=None, metavar="N1,M1",
                   help="first transmit and receive block sizes (default: halves)")
    _add_solver_flags(p)
    p.add_argument("--db", action="store_true", help="also report amplitudes as 20 log10")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("reproduce", help="run a figure preset ensemble")
    p.add_argument("figure", choices=("fig3", "fig6"))
    p.add_argument("--trials", type=_int_at_least(1), default=10_000)
    p.add_argument("--seed", type=_seed, default=1)
    p.add_argument("--iters", type=_int_at_least(1), default=8)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=_int_at_least(1), default=os.cpu_count() or 1)
    p.add_argument("--db", action="store_true", help="write CSV values as 20 log10")

    p = sub.add_parser("oracle", help="compare a solver with the exhaustive grid")
    p.add_argument("--in", dest="infile", metavar="PATH", required=True)
    p.add_argument("--grid-levels", type=_int_at_least(1), default=16, help="phase levels")
    p.add_argument("--magnitude-levels", type=_int_at_least(2), default=5)
    p.add_argument("--objective", choices=("siso", "det"), default="siso")
    p.add_argument("--split", type=_pair, default=None, metavar="N1,M1")
    p.add_argument("--max-evaluations", type=_int_at_least(1), default=10 ** 8)
    _add_solver_flags(p)

    p = sub.add_parser("gen", help="write a Gaussian channel fixture")
    p.add_argument("--n", type=_int_at_least(1), required=True)
    p.add_argument("--m", type=_int_at_least(1), required=True)
    p.add_argument("--p", type=_int_at_least(1), default=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    return parser


def _config(args):
    return SolverConfig(max_iterations=args.iters, tolerance=args.tol,
                        restarts=args.restarts, inner_iterations=args.inner, seed=0)


def _load_channel(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return tensor_from_json(text)
    except (FixtureError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _channel(args):
    if args.infile:
        return _load_channel(args.infile)
    if args.gen is None:
        raise UsageError("give a channel with --in PATH or --gen {matrix,tensor}")
    p = 1 if args.gen == "matrix" else args.p
    return random_gaussian_tensor(args.n, args.m, p, args.seed)


def _partition(split, n, m):
    if split is None:
        if n < 2 or m < 2:
            raise UsageError(f"split needs at least 2 x 2 antennas, channel is {n} x {m}")
        return BlockPartition.halves(n, m)
    n1, m1 = split
    if not (n1 < n and m1 < m):
        raise UsageError(f"--split {n1},{m1} leaves an empty block for a {n} x {m} channel")
    return BlockPartition(n1, n - n1, m1, m - m1)


def _emit(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _db(x):
    return 20 * math.log10(x) if x > 0 else float("-inf")


def cmd_solve(args):
    T = _channel(args)
    cfg = _config(args)
    doc = {"schema": SCHEMA_VERSION, "algorithm": args.alg, "channel": {"n": T.n, "m": T.m, "p": T.p}}
    if args.alg == "power":
        if T.p != 1:
            raise UsageError(f"the power method needs a matrix channel, got p = {T.p}")
        res = power_method(T.slice(0), cfg)
    elif args.alg == "als":
        res = als_tensor(T, cfg)
    elif args.alg == "hopm":
        res = hopm(T, cfg)
    elif args.alg == "als-shared":
        if args.k > min(T.n, T.m):
            raise UsageError(f"--k {args.k} exceeds min(N, M) = {min(T.n, T.m)}")
        res = als_shared(T, args.k, cfg)
    else:
        part = _partition(args.split, T.n, T.m)
        doc["partition"] = [part.n1, part.n2, part.m1, part.m2]
        res = als_split_tensor(T, part, cfg)
    doc["result"] = res.to_dict()
    if args.alg == "als-split":
        doc["result"]["abs_det"] = res.objective
    if args.db:
        if hasattr(res, "sigma"):
            doc["result"]["sigma_db"] = _db(res.sigma)
        else:
            doc["result"]["stream_sigmas_db"] = [_db(x) for x in res.stream_sigmas]
    _emit(doc, args.out)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_reproduce(args):
    if args.trials < MIN_REPRODUCE_TRIALS:
        raise UsageError(f"--trials must be >= {MIN_REPRODUCE_TRIALS}, got {args.trials}")
    specs = (figure3_specs if args.figure == "fig3" else figure6_specs)(args.trials, args.seed, args.iters)
    os.makedirs(args.out, exist_ok=True)
    summary = {"schema": SCHEMA_VERSION, "figure": args.figure, "trials": args.trials,
               "seed": args.seed, "iterations": args.iters, "curves": {}}
    stats = {}
    for name, spec in specs.items():
        st = run_ensemble(spec, threads=args.threads)
        stats[name] = st
        csv_path, _ = st.write(os.path.join(args.out, f"{args.figure}_{name}.csv"), db=args.db)
        summary["curves"][name] = {
            "csv": os.path.basename(csv_path),
            "medians": {q: st.median(q) for q in st.quantities},
            "not_converged": int(st.trials - np.sum(st.converged)),
            "monotone_violations": int(st.violations),
        }
    if args.figure == "fig3":
        pairs = [("matrix-power", "tensor-als", "sigma"), ("tensor-hopm", "tensor-als", "sigma")]
    else:
        pairs = [("matrix-shared", "matrix-split", "weaker"), ("tensor-shared", "tensor-split", "weaker"),
                 ("tensor-shared", "tensor-split", "stronger")]
    summary["comparisons"] = [
        {"a": a, "b": b, "quantity": q, **_jsonable(compare_ensembles(stats[a], stats[b], q, q))}
        for a, b, q in pairs
    ]
    _emit(summary, os.path.join(args.out, f"{args.figure}_summary.json"))
    return EXIT_OK


def _jsonable(report):
    out = dict(report)
    out["percentile_delta"] = {str(k): v for k, v in report["percentile_delta"].items()}
    out["bootstrap_median_delta_95"] = list(report["bootstrap_median_delta_95"])
    return out


def cmd_oracle(args):
    T = _channel(args)
    cfg = _config(args)
    part = _partition(args.split, T.n, T.m) if args.objective == "det" else None
    spec = GridOracleSpec(phase_levels=args.grid_levels, magnitude_levels=args.magnitude_levels,
                          objective=args.objective, partition=part, max_evaluations=args.max_evaluations)
    try:
        grid = grid_oracle(T, spec)
    except GridTooLarge as exc:
        raise UsageError(str(exc)) from None
    if args.objective == "siso":
        res = power_method(T.slice(0), cfg) if T.p == 1 else als_tensor(T, cfg)
        solver_value = res.sigma
        solver = "power" if T.p == 1 else "als"
    else:
        res = als_split_tensor(T, part, cfg)
        solver_value = res.objective
        solver = "als-split"
    doc = {
        "schema": SCHEMA_VERSION,
        "objective": args.objective,
        "grid": {"phase_levels": args.grid_levels, "magnitude_levels": args.magnitude_levels,
                 "evaluations": grid.evaluations, "best": grid.best},
        "solver": {"algorithm": solver, "value": solver_value, "converged": bool(res.converged)},
        "solver_minus_grid": solver_value - grid.best,
        "solver_at_least_grid": bool(solver_value >= grid.best * (1 - 1e-12)),
    }
    _emit(doc, None)
    return EXIT_OK


def cmd_gen(args):
    text = tensor_to_json(random_gaussian_tensor(args.n, args.m, args.p, args.seed)) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "reproduce": cmd_reproduce, "oracle": cmd_oracle, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle":
        args.gen = None
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mmwbeam {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
