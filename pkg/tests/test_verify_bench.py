import math

import numpy as np
import pytest

from mpgemm import (BenchConfig, GemmScalars, RatioSpec, bench_csv, bench_run, execute_parallel,
                    make_problem, reference_gemm_f64, relative_fro_error, to_dense_f64)
from mpgemm.verify import ZeroReferenceError


def python_triple_loop(alpha, A, B, beta, C, panel):
    """Plain-float scalar oracle: panel partial sums folded into C."""
    M, K = A.shape
    N = B.shape[1]
    out = [[float(C[r, c]) for c in range(N)] for r in range(M)]
    for start in range(0, K, panel):
        b = beta if start == 0 else 1.0
        for r in range(M):
            for c in range(N):
                acc = 0.0
                for p in range(start, start + panel):
                    acc += float(A[r, p]) * float(B[p, c])
                out[r][c] = alpha * acc + b * out[r][c]
    return np.array(out)


def test_reference_identity(rng):
    B = rng.uniform(-1, 1, (5, 5))
    out = reference_gemm_f64(np.eye(5), B, np.zeros((5, 5)), GemmScalars(1.0, 0.0))
    np.testing.assert_array_equal(out, B)


def test_reference_scalar():
    out = reference_gemm_f64(np.array([[1.0]]), np.array([[4.0]]), np.array([[5.0]]),
                             GemmScalars(2.0, 3.0))
    assert out.tolist() == [[23.0]]


@pytest.mark.parametrize("panel", [None, 1, 3, 6])
def test_reference_matches_scalar_oracle(panel, rng):
    A, B, C = rng.uniform(-1, 1, (4, 6)), rng.uniform(-1, 1, (6, 5)), rng.uniform(-1, 1, (4, 5))
    got = reference_gemm_f64(A, B, C, GemmScalars(1.5, 0.25), panel)
    expected = python_triple_loop(1.5, A, B, 0.25, C, panel or 6)
    assert got.tobytes() == expected.tobytes()


def test_reference_errors():
    with pytest.raises(ValueError):
        reference_gemm_f64(np.ones((2, 3)), np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        reference_gemm_f64(np.ones((2, 4)), np.ones((4, 2)), np.ones((2, 2)), panel=3)


def test_reference_equals_tiled_fp64_engine():
    p = make_problem(64, 48, 96, 16, RatioSpec(100, 0), 5, GemmScalars(0.5, 2.0))
    execute_parallel(p.graph(), 3)
    assert to_dense_f64(p.c).tobytes() == p.reference().tobytes()


def test_relative_error_basics(rng):
    ref = rng.uniform(-1, 1, (10, 10))
    assert relative_fro_error(ref, ref) == 0.0
    assert relative_fro_error(1.01 * ref, ref) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ZeroReferenceError):
        relative_fro_error(ref, np.zeros((10, 10)))
    with pytest.raises(ValueError):
        relative_fro_error(ref, ref[:5])


def test_problem_reset():
    p = make_problem(16, 16, 16, 8, RatioSpec(50, 50), 1)
    before = to_dense_f64(p.c)
    execute_parallel(p.graph(), 2)
    assert not np.array_equal(to_dense_f64(p.c), before)
    p.reset()
    np.testing.assert_array_equal(to_dense_f64(p.c), before)


def test_problem_divisibility():
    with pytest.raises(ValueError, match="K=20"):
        make_problem(16, 16, 20, 8, RatioSpec(50, 50), 1)


def test_bench_rows_and_baseline():
    cfg = BenchConfig(64, 64, 64, 16, seed=3, workers=2, repetitions=1)
    rows = bench_run(cfg)
    assert [r.label for r in rows] == ["100D:0S", "80D:20S", "50D:50S", "20D:80S", "0D:100S"]
    assert rows[0].speedup_vs_alldp == 1.0
    assert rows[0].rel_fro_error == 0.0
    assert all(r.rel_fro_error > 0 for r in rows[1:])
    for r in rows:
        assert r.flops.flops_total == 2 * 64**3
        assert math.isclose(r.gflops_effective, 2 * 64**3 / r.elapsed_seconds / 1e9)


def test_bench_baseline_always_first():
    rows = bench_run(BenchConfig(32, 32, 32, 16, ratios=[RatioSpec(0, 100)], repetitions=1,
                                 with_error=False))
    assert [r.label for r in rows] == ["100D:0S", "0D:100S"]
    assert math.isnan(rows[1].rel_fro_error)


def test_bench_csv_schema():
    rows = bench_run(BenchConfig(32, 32, 32, 16, ratios=[RatioSpec(50, 50)], repetitions=1))
    lines = bench_csv(rows).splitlines()
    assert lines[0] == "label,elapsed_s,gflops,speedup,rel_err"
    assert len(lines) == 3
    assert lines[1].startswith("100D:0S,") and ",1.0000," in lines[1]
