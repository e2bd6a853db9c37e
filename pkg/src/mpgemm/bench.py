"""Problem setup and the ratio-sweep benchmark harness."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kernels import GemmScalars
from .precision_map import ALL_DOUBLE, PAPER_RATIOS, RatioSpec, generate_ratio_map, matrix_seeds
from .runtime import FlopReport, TaskGraph, build_task_graph, execute_parallel, flop_report
from .tiles import TiledMatrix, fill_random, random_dense_f64, to_dense_f64
from .verify import reference_gemm_f64, relative_fro_error


def data_seeds(base_seed: int) -> tuple[int, int, int]:
    """Element-data seeds for A, B, C (map seeds use base+1..base+3)."""
    return base_seed + 4, base_seed + 5, base_seed + 6


@dataclass
class GemmProblem:
    a: TiledMatrix
    b: TiledMatrix
    c: TiledMatrix
    c_initial: TiledMatrix
    scalars: GemmScalars
    seed: int

    @property
    def nb(self) -> int:
        return self.a.nb

    def graph(self) -> TaskGraph:
        return build_task_graph(self.a, self.b, self.c, self.scalars)

    def reset(self) -> None:
        """Restore C to its filled state so the GEMM can be re-run."""
        for i in range(self.c.mt):
            for j in range(self.c.nt):
                self.c.tiles[i][j].data[...] = self.c_initial.tiles[i][j].data

    def original_dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pre-truncation FP64 values of A, B and C."""
        sa, sb, sc = data_seeds(self.seed)
        nb = self.nb
        return (random_dense_f64(self.a.rows, self.a.cols, nb, sa),
                random_dense_f64(self.b.rows, self.b.cols, nb, sb),
                random_dense_f64(self.c.rows, self.c.cols, nb, sc))

    def reference(self) -> np.ndarray:
        a0, b0, c0 = self.original_dense()
        return reference_gemm_f64(a0, b0, c0, self.scalars, panel=self.nb)


def make_problem(m: int, n: int, k: int, nb: int, ratio: RatioSpec, seed: int,
                 scalars: GemmScalars = GemmScalars()) -> GemmProblem:
    """Build and fill A (m x k), B (k x n), C (m x n) with independent ``ratio`` maps."""
    for name, dim in (("M", m), ("N", n), ("K", k)):
        if dim % nb:
            raise ValueError(f"{name}={dim} is not divisible by tile size {nb}")
    sa, sb, sc = matrix_seeds(seed)
    mats = []
    for (rows, cols), map_seed, data_seed in zip(((m, k), (k, n), (m, n)),
                                                  (sa, sb, sc), data_seeds(seed)):
        pmap = generate_ratio_map(rows // nb, cols // nb, ratio, map_seed)
        mat = TiledMatrix(rows, cols, nb, pmap)
        fill_random(mat, data_seed)
        mats.append(mat)
    a, b, c = mats
    return GemmProblem(a, b, c, c.copy(), scalars, seed)


@dataclass
class BenchConfig:
    m: int
    n: int
    k: int
    nb: int
    ratios: Sequence[RatioSpec] = PAPER_RATIOS
    seed: int = 0
    workers: int = 1
    repetitions: int = 3
    alpha: float = 1.0
    beta: float = 1.0
    with_error: bool = True


@dataclass
class BenchResult:
    label: str
    elapsed_seconds: float
    gflops_effective: float
    speedup_vs_alldp: float
    rel_fro_error: float
    flops: Optional[FlopReport] = field(default=None, repr=False)


def time_gemm(problem: GemmProblem, workers: int, repetitions: int) -> float:
    """Best-of-``repetitions`` wall time of the parallel execution alone."""
    best = math.inf
    for _ in range(max(1, repetitions)):
        problem.reset()
        g = problem.graph()
        t0 = time.perf_counter()
        execute_parallel(g, workers)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_run(config: BenchConfig) -> list[BenchResult]:
    """Time every ratio (the all-FP64 baseline is always included, first).

    Every ratio uses the same base seed, so the pre-truncation data is
    identical across rows and only the precision maps change.
    """
    ratios = list(config.ratios)
    if ALL_DOUBLE not in ratios:
        ratios.insert(0, ALL_DOUBLE)
    else:
        ratios.remove(ALL_DOUBLE)
        ratios.insert(0, ALL_DOUBLE)
    scalars = GemmScalars(config.alpha, config.beta)
    total_flops = 2 * config.m * config.n * config.k
    reference = None
    rows = []
    for ratio in ratios:
        problem = make_problem(config.m, config.n, config.k, config.nb, ratio, config.seed, scalars)
        elapsed = time_gemm(problem, config.workers, config.repetitions)
        err = math.nan
        if config.with_error:
            if reference is None:
                reference = problem.reference()
            err = relative_fro_error(to_dense_f64(problem.c), reference)
        rows.append(BenchResult(ratio.label, elapsed, total_flops / elapsed / 1e9, math.nan, err,
                                flop_report(problem.graph(), problem.c.map, config.nb)))
    base = rows[0].elapsed_seconds
    for r in rows:
        r.speedup_vs_alldp = base / r.elapsed_seconds
    rows[0].speedup_vs_alldp = 1.0
    return rows


BENCH_COLUMNS = ("label", "elapsed_s", "gflops", "speedup", "rel_err")


def bench_csv(results: Sequence[BenchResult]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in results:
        w.writerow([r.label, f"{r.elapsed_seconds:.6f}", f"{r.gflops_effective:.4f}",
                    f"{r.speedup_vs_alldp:.4f}", f"{r.rel_fro_error:.6e}"])
    return out.getvalue()
