"""Dense FP64 reference GEMM and the relative Frobenius error metric."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .kernels import GemmScalars


class ZeroReferenceError(ValueError):
    pass


def reference_gemm_f64(A: np.ndarray, B: np.ndarray, C: np.ndarray,
                       scalars: GemmScalars = GemmScalars(),
                       panel: Optional[int] = None) -> np.ndarray:
    """Naive dense ``alpha*A@B + beta*C`` in FP64 with a fixed summation order.

    Every element accumulates its products in increasing ``p``. The reduction
    dimension is cut into panels of ``panel`` columns (default: a single
    panel of width K); each panel's dot product starts from zero and is
    folded in as ``alpha*acc + beta*C``, with ``beta`` applied only for the
    first panel. With ``panel`` equal to the tile size this reproduces the
    rounding of the tiled engine exactly; with one panel it is the textbook
    triple loop.

    Vectorised across output elements only, never across ``p``.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    M, K = A.shape
    if B.shape[0] != K or C.shape != (M, B.shape[1]):
        raise ValueError(f"nonconformant shapes A{A.shape} B{B.shape} C{C.shape}")
    panel = K if panel is None else panel
    if panel < 1 or K % panel:
        raise ValueError(f"panel width {panel} does not divide K={K}")
    alpha = np.float64(scalars.alpha)
    out = C.copy()
    acc = np.empty_like(out)
    for start in range(0, K, panel):
        acc.fill(0.0)
        for p in range(start, start + panel):
            acc += A[:, p:p + 1] * B[p:p + 1, :]
        beta = np.float64(scalars.beta if start == 0 else 1.0)
        out = alpha * acc + beta * out
    return out


def relative_fro_error(C_test: np.ndarray, C_ref: np.ndarray) -> float:
    C_test = np.asarray(C_test, dtype=np.float64)
    C_ref = np.asarray(C_ref, dtype=np.float64)
    if C_test.shape != C_ref.shape:
        raise ValueError(f"shape mismatch {C_test.shape} vs {C_ref.shape}")
    ref_norm = np.linalg.norm(C_ref)
    if ref_norm == 0.0:
        raise ZeroReferenceError("reference matrix has zero Frobenius norm")
    return float(np.linalg.norm(C_test - C_ref) / ref_norm)
