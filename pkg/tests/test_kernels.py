import numpy as np
import pytest

from mpgemm import GemmScalars, Precision, PrecisionMismatchError, Tile, convert_tile, gemm_tile, mixed_gemm_task

F64, F32 = Precision.FP64, Precision.FP32


def tile(values, precision=F64):
    arr = np.array(values, dtype=precision.dtype)
    return Tile(arr.shape[0], precision, np.ascontiguousarray(arr))


def scalar_loop(alpha, a, b, beta, c):
    """Element-at-a-time triple loop in the arrays' own dtype, increasing p."""
    dt = c.dtype.type
    alpha, beta = dt(alpha), dt(beta)
    nb = a.shape[0]
    out = c.copy()
    for r in range(nb):
        for col in range(nb):
            acc = dt(0)
            for p in range(nb):
                acc = dt(acc + dt(a[r, p] * b[p, col]))
            out[r, col] = dt(alpha * acc) + dt(beta * c[r, col])
    return out


def test_convert_exact_halves():
    t = tile([[0.5, -0.25], [1.0, 2.0]])
    out = convert_tile(t, F32)
    assert out.precision is F32
    assert out.data.tolist() == [[0.5, -0.25], [1.0, 2.0]]


def test_convert_rounds_to_nearest_even():
    out = convert_tile(tile([[1 + 2.0**-30]]), F32)
    assert out.data[0, 0] == np.float32(1.0)
    # exact tie between 1 and 1+2^-23 rounds to the even mantissa
    assert convert_tile(tile([[1 + 2.0**-24]]), F32).data[0, 0] == np.float32(1.0)
    assert convert_tile(tile([[1 + 3 * 2.0**-24]]), F32).data[0, 0] == np.float32(1 + 2.0**-22)


def test_convert_overflow_to_inf():
    out = convert_tile(tile([[1e300, -1e300], [3.5e38, 1.0]]), F32).data
    assert np.isposinf(out[0, 0]) and np.isneginf(out[0, 1]) and np.isposinf(out[1, 0])


def test_convert_same_precision_is_identity():
    t = tile([[3.0]])
    assert convert_tile(t, F64) is t


def test_fp32_round_trip(rng):
    bits = rng.integers(0, 2**32, size=200000, dtype=np.uint64).astype(np.uint32)
    vals = bits.view(np.float32)
    vals = vals[np.isfinite(vals)].reshape(-1)[:40000].reshape(200, 200)
    t = Tile(200, F32, np.ascontiguousarray(vals))
    back = convert_tile(convert_tile(t, F64), F32)
    assert back.data.tobytes() == t.data.tobytes()


@pytest.mark.parametrize("precision", [F64, F32])
def test_identity_a_gives_b(precision, rng):
    b = tile(rng.uniform(-1, 1, (8, 8)), precision)
    c = tile(rng.uniform(-1, 1, (8, 8)), precision)
    gemm_tile(1.0, tile(np.eye(8), precision), b, 0.0, c)
    assert c.data.tobytes() == b.data.tobytes()


def test_alpha0_beta1_unchanged(rng):
    c = tile(rng.uniform(-1, 1, (5, 5)))
    before = c.data.tobytes()
    gemm_tile(0.0, tile(rng.uniform(-1, 1, (5, 5))), tile(rng.uniform(-1, 1, (5, 5))), 1.0, c)
    assert c.data.tobytes() == before


def test_scalar_case():
    c = tile([[1.0]])
    gemm_tile(1.0, tile([[2.0]]), tile([[3.0]]), 1.0, c)
    assert c.data[0, 0] == 7.0


@pytest.mark.parametrize("precision", [F64, F32])
@pytest.mark.parametrize("nb", [1, 2, 7, 16])
def test_matches_scalar_loop_bitwise(precision, nb, rng):
    a, b, c = (tile(rng.uniform(-1, 1, (nb, nb)), precision) for _ in range(3))
    expected = scalar_loop(0.75, a.data, b.data, -1.25, c.data)
    gemm_tile(0.75, a, b, -1.25, c)
    assert c.data.tobytes() == expected.tobytes()


def test_precision_mismatch_rejected():
    with pytest.raises(PrecisionMismatchError):
        gemm_tile(1.0, tile([[1.0]], F32), tile([[1.0]]), 0.0, tile([[0.0]]))


def test_mixed_all_fp64_equals_gemm_tile(rng):
    vals = [rng.uniform(-1, 1, (6, 6)) for _ in range(3)]
    c1, c2 = tile(vals[2]), tile(vals[2])
    mixed_gemm_task(GemmScalars(1.5, 0.5), tile(vals[0]), tile(vals[1]), c1)
    gemm_tile(1.5, tile(vals[0]), tile(vals[1]), 0.5, c2)
    assert c1.data.tobytes() == c2.data.tobytes()


def test_mixed_truncates_before_multiply():
    c = tile([[0.0]], F32)
    mixed_gemm_task(GemmScalars(1.0, 0.0), tile([[1 + 2.0**-30]]), tile([[1.0]], F32), c)
    assert c.data[0, 0] == np.float32(1.0)


def test_mixed_upconverts_into_fp64(rng):
    a = tile(rng.uniform(-1, 1, (8, 8)), F32)
    b = tile(rng.uniform(-1, 1, (8, 8)), F32)
    c = tile(rng.uniform(-1, 1, (8, 8)), F64)
    expected = scalar_loop(1.0, a.data.astype(np.float64), b.data.astype(np.float64), 1.0, c.data)
    mixed_gemm_task(GemmScalars(), a, b, c)
    assert c.data.tobytes() == expected.tobytes()


def test_mixed_never_mutates_sources(rng):
    a = tile(rng.uniform(-1, 1, (8, 8)), F64)
    b = tile(rng.uniform(-1, 1, (8, 8)), F32)
    sums = (a.data.tobytes(), b.data.tobytes())
    for cp in (F64, F32):
        mixed_gemm_task(GemmScalars(2.0, 1.0), a, b, tile(np.ones((8, 8)), cp))
    assert (a.data.tobytes(), b.data.tobytes()) == sums
    assert a.precision is F64 and b.precision is F32


def test_alpha_narrowed_for_fp32_task():
    # 1 + 2^-30 narrows to 1.0 in an FP32 task but not in an FP64 one
    c32, c64 = tile([[0.0]], F32), tile([[0.0]], F64)
    s = GemmScalars(1 + 2.0**-30, 0.0)
    mixed_gemm_task(s, tile([[1.0]]), tile([[1.0]]), c32)
    mixed_gemm_task(s, tile([[1.0]]), tile([[1.0]]), c64)
    assert c32.data[0, 0] == 1.0
    assert c64.data[0, 0] == 1 + 2.0**-30


def test_repeatable(rng):
    vals = [rng.uniform(-1, 1, (32, 32)) for _ in range(3)]
    outs = []
    for _ in range(3):
        c = tile(vals[2], F32)
        mixed_gemm_task(GemmScalars(), tile(vals[0]), tile(vals[1], F32), c)
        outs.append(c.data.tobytes())
    assert len(set(outs)) == 1
