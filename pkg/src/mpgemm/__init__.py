"""Tile-centric mixed-precision GEMM (FP64/FP32 per tile)."""
from .bench import BenchConfig, BenchResult, GemmProblem, bench_csv, bench_run, make_problem
from .comm import (CommRecord, CommReport, ProcessGrid, default_grid, owner,
                   simulate_summa)
from .kernels import GemmScalars, PrecisionMismatchError, convert_tile, gemm_tile, mixed_gemm_task
from .precision_map import (MapParseError, PrecisionMap, RatioSpec, export_heatmap,
                            generate_ratio_map, map_stats, parse_map, serialize_map)
from .runtime import (FlopReport, GemmTask, ShapeMismatchError, TaskGraph, build_task_graph,
                      execute_parallel, execute_sequential, flop_report)
from .tiles import (Precision, Rng64, Tile, TiledMatrix, fill_random, new_tiled_matrix,
                    rng_next, rng_uniform, to_dense_f64)
from .verify import reference_gemm_f64, relative_fro_error

__version__ = "0.1.0"
