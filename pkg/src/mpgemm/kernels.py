"""Per-tile GEMM kernels with receiver-side precision conversion.

The tile kernel has a fixed summation order: for each output element the
dot product is accumulated in increasing ``p`` in the precision of C, and
only then scaled and combined with ``beta * C``. The numba loop nest
(rows, then ``p``, then columns) vectorises across columns without
reassociating any sum, so results are bitwise reproducible and match a
scalar triple loop exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .tiles import Precision, Tile, narrow


class PrecisionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GemmScalars:
    alpha: float = 1.0
    beta: float = 1.0

    def as_precision(self, precision: Precision):
        """``(alpha, beta)`` rounded to the task's operational precision."""
        dt = precision.dtype.type
        with np.errstate(over="ignore"):
            return dt(self.alpha), dt(self.beta)


_SIGS = ["void(float64, float64[:, ::1], float64[:, ::1], float64, float64[:, ::1])",
         "void(float32, float32[:, ::1], float32[:, ::1], float32, float32[:, ::1])"]


@njit(_SIGS, nogil=True, cache=True)
def _gemm_strict(alpha, a, b, beta, c):
    nb = a.shape[0]
    acc = np.empty(nb, dtype=c.dtype)
    for r in range(nb):
        for col in range(nb):
            acc[col] = 0
        for p in range(nb):
            arp = a[r, p]
            for col in range(nb):
                acc[col] += arp * b[p, col]
        for col in range(nb):
            c[r, col] = alpha * acc[col] + beta * c[r, col]


def convert_tile(t: Tile, target: Precision) -> Tile:
    """Return ``t`` in ``target`` precision; the same object if already there."""
    if t.precision is target:
        return t
    return Tile(t.nb, target, narrow(t.data, target))


def gemm_tile(alpha: float, A: Tile, B: Tile, beta: float, C: Tile) -> None:
    """C <- alpha*A@B + beta*C, computed in C's precision, in place."""
    if A.precision is not C.precision or B.precision is not C.precision:
        raise PrecisionMismatchError(
            f"operands {A.precision.name}/{B.precision.name} do not match C ({C.precision.name})")
    if not (A.nb == B.nb == C.nb):
        raise ValueError(f"tile sizes differ: {A.nb}, {B.nb}, {C.nb}")
    al, be = GemmScalars(alpha, beta).as_precision(C.precision)
    _gemm_strict(al, A.data, B.data, be, C.data)


def mixed_gemm_task(scalars: GemmScalars, A: Tile, B: Tile, C: Tile) -> None:
    """One task of the tiled algorithm: convert A and B to C's precision, then GEMM.

    Conversion results are private to the call; the source tiles are untouched.
    """
    target = C.precision
    gemm_tile(scalars.alpha, convert_tile(A, target), convert_tile(B, target),
              scalars.beta, C)
