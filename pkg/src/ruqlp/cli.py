"""``ruqlp`` command line: gen, decompose, angles, bounds, bench.

Exit codes: 0 success, 1 computational failure, 2 usage error (bad flags,
missing or malformed input, parameters that do not fit the matrix),
3 when ``bounds`` reports at least one violated row.
"""
import argparse
import csv
import os
import sys

import numpy as np

from . import analysis, bench, matgen
from .errors import MatrixMarketError, RuqlpError, ValidationError
from .matcore import svd
from .randfact import SketchConfig, decompose, pivoted_qlp

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2, 3
DECOMPOSE_METHODS = ("ruqlp", "pivoted_qlp", "rsvd", "cor_utv", "rp_tsod")


class _UsageProblem(Exception):
    pass


def _fmt(x):
    return format(float(x), ".17g")


def _add_sketch_args(p, need_k=True):
    p.add_argument("--k", type=int, required=need_k, help="target rank")
    p.add_argument("--p", type=int, default=0, help="oversampling (default 0)")
    p.add_argument("--ortho-interval", type=int, default=1,
                   help="orthonormalize every this many power half-steps")
    p.add_argument("--seed", type=int, default=0, help="sketch seed (default 0)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ruqlp", description="Randomized unpivoted QLP factorization toolkit.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gen", help="write a test matrix to a Matrix Market file")
    g.add_argument("--family", required=True,
                   choices=[f for f in matgen.FAMILIES if f != "file"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--mu", type=float)
    g.add_argument("--z", type=float)
    g.add_argument("--density", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help=".mtx path (a .csv suffix writes a dense dump)")

    d = sub.add_parser("decompose", help="factor a matrix and write the factors")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--method", choices=DECOMPOSE_METHODS, default="ruqlp")
    _add_sketch_args(d, need_k=False)
    d.add_argument("--q", type=int, default=0)
    d.add_argument("--out-dir", default=".", help="directory for factor and value files")

    a = sub.add_parser("angles", help="sines of principal angles for several q")
    a.add_argument("--in", dest="input", required=True)
    _add_sketch_args(a)
    a.add_argument("--q", type=int, nargs="+", default=[0, 1, 2])
    a.add_argument("--out", help="CSV path (default: standard output)")

    b = sub.add_parser("bounds", help="check every per-run bound against one run")
    b.add_argument("--in", dest="input", required=True)
    _add_sketch_args(b)
    b.add_argument("--q", type=int, default=0)
    b.add_argument("--out", help="CSV path (default: standard output)")

    t = sub.add_parser("bench", help="time the randomized methods")
    t.add_argument("--families", nargs="+", default=["gaussian_dense"],
                   choices=list(bench.BENCH_FAMILIES))
    t.add_argument("--sizes", type=int, nargs="+", default=[500])
    t.add_argument("--d-ratio", type=float, default=0.2)
    t.add_argument("--q", type=int, nargs="+", default=[0])
    t.add_argument("--methods", nargs="+", default=list(bench.METHODS),
                   choices=list(bench.METHODS))
    t.add_argument("--trials", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=1,
                   help="BLAS threads during timing; 0 leaves the pools alone")
    t.add_argument("--out-trials", required=True)
    t.add_argument("--out-summary", required=True)
    parser.subcommands = {"gen": g, "decompose": d, "angles": a, "bounds": b, "bench": t}
    return parser


def _load(path):
    if not os.path.isfile(path):
        raise _UsageProblem(f"input file not found: {path}")
    try:
        return matgen.load_matrix_market(path)
    except MatrixMarketError as exc:
        raise _UsageProblem(f"{path}: {exc}") from None


def _config(args, q):
    if args.k is None:
        raise _UsageProblem("--k is required for randomized methods")
    return SketchConfig(k=args.k, p=args.p, q=q, ortho_interval=args.ortho_interval,
                        seed=args.seed)


class _Output:
    """Text sink: a file when a path is given, otherwise standard output."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path is None:
            return sys.stdout
        self.fh = open(self.path, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.path is not None:
            self.fh.close()


def cmd_gen(args):
    spec = matgen.MatrixSpec(family=args.family, n=args.n, k=args.k, mu=args.mu, z=args.z,
                             density=args.density, seed=args.seed)
    a = matgen.generate(spec)
    if args.out.endswith(".csv"):
        matgen.write_dense_csv(args.out, a)
    else:
        matgen.write_matrix_market(args.out, a, comment=f"{spec.describe()} seed={args.seed}")
    return EXIT_OK


def cmd_decompose(args):
    a = _load(args.input)
    if args.method == "pivoted_qlp":
        f = pivoted_qlp(a)
    else:
        f = decompose(a, args.method, _config(args, args.q))
    if args.method == "rsvd":
        parts = {"u": f.u, "v": f.v}
        values = f.sigma
    elif args.method == "cor_utv":
        parts = {"u": f.u_mat, "t": f.t_mat, "v": f.v_mat}
        values = f.t_values
    else:
        parts = {"q": f.q_mat, "l": f.l_mat, "p": f.p_mat}
        values = f.l_values
    os.makedirs(args.out_dir, exist_ok=True)
    for name, mat in parts.items():
        matgen.write_matrix_market(os.path.join(args.out_dir, f"{name}.mtx"), mat)
    with open(os.path.join(args.out_dir, "values.csv"), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "value"])
        for i, v in enumerate(values, start=1):
            writer.writerow([i, _fmt(v)])
    return EXIT_OK


def cmd_angles(args):
    a = _load(args.input)
    oracle = svd(a)
    with _Output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["q", "index", "sin_theta", "sin_phi"])
        for q in args.q:
            f = decompose(a, "ruqlp", _config(args, q))
            errs = analysis.empirical_errors(a, f, args.k, oracle)
            for i in range(args.k):
                writer.writerow([q, i + 1, _fmt(errs.sin_theta[i]), _fmt(errs.sin_phi[i])])
    return EXIT_OK


def cmd_bounds(args):
    a = _load(args.input)
    f = decompose(a, "ruqlp", _config(args, args.q))
    report = analysis.verify_run(a, f)
    with _Output(args.out) as out:
        report.write_csv(out)
    return EXIT_OK if report.all_satisfied else EXIT_VIOLATION


def cmd_bench(args):
    records = bench.run_benchmark(
        families=args.families, sizes=args.sizes, d_ratio=args.d_ratio, q_values=args.q,
        methods=args.methods, trials=args.trials, seed=args.seed,
        threads=None if args.threads == 0 else args.threads)
    with open(args.out_trials, "w", encoding="utf-8", newline="") as fh:
        bench.write_trials_csv(records, fh)
    with open(args.out_summary, "w", encoding="utf-8", newline="") as fh:
        bench.write_summary_csv(records, fh)
    for r in records:
        if r.failed:
            print(f"warning: {r.method} n={r.n} q={r.q}: {'; '.join(r.failures)}",
                  file=sys.stderr)
        if not r.parity_ok:
            print(f"warning: {r.method} n={r.n} q={r.q} error exceeds "
                  f"{bench.PARITY_FACTOR:g}x the best method", file=sys.stderr)
    return EXIT_FAILURE if any(r.failed for r in records) else EXIT_OK


COMMANDS = {"gen": cmd_gen, "decompose": cmd_decompose, "angles": cmd_angles,
            "bounds": cmd_bounds, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (_UsageProblem, ValidationError) as exc:
        parser.subcommands[args.command].print_usage(sys.stderr)
        print(f"ruqlp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuqlpError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"ruqlp {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"ruqlp {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
