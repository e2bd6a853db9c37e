"""Command-line entry point: ``mpgemm {gen-map,gemm,verify,bench,sim}``."""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import BenchConfig, bench_csv, bench_run, make_problem
from .comm import ProcessGrid, default_grid, simulate_summa
from .kernels import GemmScalars
from .precision_map import (PAPER_RATIOS, RatioSpec, export_heatmap, generate_ratio_map,
                            map_stats, matrix_seeds, parse_map, serialize_map)
from .runtime import TaskGraph, execute_parallel, execute_sequential, flop_report
from .tiles import to_dense_f64
from .verify import relative_fro_error

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _ratio(text: str) -> RatioSpec:
    try:
        return RatioSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text: str) -> ProcessGrid:
    try:
        return ProcessGrid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_shape(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="matrix size (N, and M/K unless given)")
    p.add_argument("--m", type=int, help="rows of A and C")
    p.add_argument("--k", type=int, help="reduction dimension")
    p.add_argument("--nb", type=int, required=True, help="tile size")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)


def _dims(args) -> tuple[int, int, int]:
    return (args.m or args.n, args.n, args.k or args.n)


def _write(path: str, data: bytes | str) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def cmd_gen_map(args) -> int:
    pmap = generate_ratio_map(args.mt, args.nt, args.ratio, args.seed)
    _write(args.out, serialize_map(pmap))
    if args.heatmap:
        fmt = args.heatmap_format or ("csv" if args.heatmap.endswith(".csv") else "pgm")
        _write(args.heatmap, export_heatmap(pmap, fmt))
    s = map_stats(pmap)
    print(f"{args.ratio.label} {args.mt}x{args.nt}: fp64={s.count_fp64} fp32={s.count_fp32} "
          f"fraction_fp64={s.fraction_fp64:.4f}")
    return EXIT_OK


def cmd_gemm(args) -> int:
    m, n, k = _dims(args)
    problem = make_problem(m, n, k, args.nb, args.ratio, args.seed,
                           GemmScalars(args.alpha, args.beta))
    g = problem.graph()
    t0 = time.perf_counter()
    execute_parallel(g, args.threads)
    elapsed = time.perf_counter() - t0
    flops = flop_report(g, problem.c.map, args.nb)
    err = relative_fro_error(to_dense_f64(problem.c), problem.reference())
    print(f"config={args.ratio.label} M={m} N={n} K={k} nb={args.nb} threads={args.threads}")
    print(f"elapsed_s={elapsed:.6f} gflops={2 * m * n * k / elapsed / 1e9:.4f}")
    print(f"tasks_fp64={flops.tasks_fp64} tasks_fp32={flops.tasks_fp32} "
          f"flops_fp64={flops.flops_fp64} flops_fp32={flops.flops_fp32}")
    print(f"rel_fro_error={err:.6e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    m, n, k = _dims(args)
    scalars = GemmScalars(args.alpha, args.beta)
    par = make_problem(m, n, k, args.nb, args.ratio, args.seed, scalars)
    seq = make_problem(m, n, k, args.nb, args.ratio, args.seed, scalars)
    execute_parallel(par.graph(), args.threads)
    execute_sequential(seq.graph())
    c_par, c_seq = to_dense_f64(par.c), to_dense_f64(seq.c)
    ref = par.reference()
    err = relative_fro_error(c_par, ref)
    checks = [("parallel == sequential (bitwise)", np.array_equal(c_par, c_seq))]
    if args.ratio.s_percent == 0:
        checks.append(("parallel == FP64 reference (bitwise)", np.array_equal(c_par, ref)))
    else:
        checks.append((f"rel_fro_error < {args.tol:g}", err < args.tol))
    print(f"config={args.ratio.label} M={m} N={n} K={k} nb={args.nb} threads={args.threads}")
    print(f"rel_fro_error={err:.6e}")
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= bool(passed)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    m, n, k = _dims(args)
    cfg = BenchConfig(m, n, k, args.nb, args.ratios or PAPER_RATIOS, args.seed, args.threads,
                      args.reps, args.alpha, args.beta, with_error=not args.no_error)
    text = bench_csv(bench_run(cfg))
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sim(args) -> int:
    grid = args.grid or default_grid(args.ranks)
    seed_a, seed_b, _ = matrix_seeds(args.seed)
    if args.a_map:
        a_map = parse_map(Path(args.a_map).read_text())
    else:
        a_map = generate_ratio_map(args.mt, args.kt, args.ratio, seed_a)
    if args.b_map:
        b_map = parse_map(Path(args.b_map).read_text())
    else:
        b_map = generate_ratio_map(args.kt, args.nt, args.ratio, seed_b)
    report = simulate_summa(TaskGraph(args.mt, args.nt, args.kt), grid, a_map, b_map, args.nb,
                            rebroadcast_per_iter=args.rebroadcast_per_iter)
    text = report.to_csv()
    if args.out:
        _write(args.out, text)
        print(f"grid={grid} messages={report.messages} bytes_total={report.bytes_total} "
              f"bytes_fp64={report.bytes_fp64} bytes_fp32={report.bytes_fp32}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpgemm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="generate a random aD:bS precision map")
    p.add_argument("--mt", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--ratio", type=_ratio, required=True, help="a:b with a+b=100")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="map file to write")
    p.add_argument("--heatmap", help="optional heatmap file (.pgm or .csv)")
    p.add_argument("--heatmap-format", choices=["csv", "pgm"])
    p.set_defaults(func=cmd_gen_map)

    p = sub.add_parser("gemm", help="run one configuration, report error and timing")
    _add_shape(p)
    p.add_argument("--ratio", type=_ratio, required=True)
    p.set_defaults(func=cmd_gemm)

    p = sub.add_parser("verify", help="oracle equivalence and error checks")
    _add_shape(p)
    p.add_argument("--ratio", type=_ratio, required=True)
    p.add_argument("--tol", type=float, default=1e-4, help="error bound for mixed ratios")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="sweep ratios and emit CSV")
    _add_shape(p)
    p.add_argument("--ratios", type=_ratio, nargs="+")
    p.add_argument("--reps", type=int, default=3, help="best-of repetitions")
    p.add_argument("--no-error", action="store_true", help="skip the FP64 reference")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sim", help="simulate SUMMA communication volume")
    p.add_argument("--mt", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--kt", type=int, required=True)
    p.add_argument("--nb", type=int, required=True)
    p.add_argument("--grid", type=_grid, help="process grid PxQ")
    p.add_argument("--ranks", type=int, help="rank count; grid chosen as square as possible")
    p.add_argument("--ratio", type=_ratio, default=RatioSpec(100, 0))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--a-map", help="map file for A (overrides --ratio)")
    p.add_argument("--b-map", help="map file for B (overrides --ratio)")
    p.add_argument("--rebroadcast-per-iter", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "sim" and not (args.grid or args.ranks):
        print("mpgemm sim: one of --grid or --ranks is required", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "threads", 1) < 1:
        print("mpgemm: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"mpgemm {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
