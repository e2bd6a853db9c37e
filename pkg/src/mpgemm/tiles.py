"""Tiled matrix storage with a per-tile storage precision.

Matrices are kept tile-contiguous: each tile is its own row-major
``nb x nb`` numpy buffer in either float64 or float32. Converting to a
globally row-major dense array is an explicit operation
(:func:`to_dense_f64`).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .precision_map import PrecisionMap

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class Precision(enum.Enum):
    FP64 = "D"
    FP32 = "S"

    @property
    def dtype(self) -> np.dtype:
        return _DTYPES[self]

    @property
    def width(self) -> int:
        """Element width in bytes."""
        return _DTYPES[self].itemsize

    @classmethod
    def of(cls, dtype) -> "Precision":
        dtype = np.dtype(dtype)
        for p, dt in _DTYPES.items():
            if dt == dtype:
                return p
        raise ValueError(f"no precision for dtype {dtype}")


_DTYPES = {Precision.FP64: np.dtype(np.float64), Precision.FP32: np.dtype(np.float32)}


class Rng64:
    """SplitMix64 generator, bit-exact on every platform.

    The scalar path uses Python integers; :meth:`next_block` produces the
    same sequence vectorised with wrapping uint64 arithmetic.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return _u64_to_uniform(self.next())

    def next_block(self, n: int) -> np.ndarray:
        """Return the next ``n`` outputs as a uint64 array and advance."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return z

    def uniform_block(self, n: int) -> np.ndarray:
        u = self.next_block(n)
        return (u >> np.uint64(11)).astype(np.float64) * 2.0**-53 * 2.0 - 1.0


def _u64_to_uniform(u: int) -> float:
    return float(u >> 11) * 2.0**-53 * 2.0 - 1.0


def rng_next(rng: Rng64) -> int:
    return rng.next()


def rng_uniform(rng: Rng64) -> float:
    """Draw a float64 in [-1, 1) from the top 53 bits of one output."""
    return rng.uniform()


def narrow(values: np.ndarray, precision: Precision) -> np.ndarray:
    """Convert to ``precision`` with round-to-nearest-even; overflow becomes +-inf."""
    with np.errstate(over="ignore"):
        return np.asarray(values).astype(precision.dtype)


@dataclass
class Tile:
    nb: int
    precision: Precision
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.nb, self.nb):
            raise ValueError(f"tile buffer shape {self.data.shape} != ({self.nb}, {self.nb})")
        if self.data.dtype != self.precision.dtype:
            raise ValueError(f"tile buffer dtype {self.data.dtype} does not match {self.precision}")

    @classmethod
    def zeros(cls, nb: int, precision: Precision) -> "Tile":
        return cls(nb, precision, np.zeros((nb, nb), dtype=precision.dtype))

    @property
    def nbytes(self) -> int:
        return self.nb * self.nb * self.precision.width


class TiledMatrix:
    """An ``mt x nt`` grid of square tiles whose precisions follow ``map``."""

    def __init__(self, rows: int, cols: int, nb: int, map: PrecisionMap):
        if nb < 1:
            raise ValueError(f"tile size must be positive, got {nb}")
        if rows % nb or cols % nb:
            raise ValueError(f"dimensions {rows}x{cols} not divisible by tile size {nb}")
        mt, nt = rows // nb, cols // nb
        if map.shape != (mt, nt):
            raise ValueError(f"precision map shape {map.shape} does not match tile grid {(mt, nt)}")
        self.rows, self.cols, self.nb = rows, cols, nb
        self.mt, self.nt = mt, nt
        self.map = map
        self.tiles = [[Tile.zeros(nb, map[i, j]) for j in range(nt)] for i in range(mt)]

    def __getitem__(self, ij: tuple[int, int]) -> Tile:
        i, j = ij
        return self.tiles[i][j]

    def __repr__(self):
        return f"TiledMatrix({self.rows}x{self.cols}, nb={self.nb}, tiles={self.mt}x{self.nt})"

    @property
    def nbytes(self) -> int:
        return sum(t.nbytes for row in self.tiles for t in row)

    def copy(self) -> "TiledMatrix":
        out = TiledMatrix(self.rows, self.cols, self.nb, self.map)
        for i in range(self.mt):
            for j in range(self.nt):
                out.tiles[i][j].data[...] = self.tiles[i][j].data
        return out

    @classmethod
    def from_dense(cls, dense: np.ndarray, nb: int, map: PrecisionMap) -> "TiledMatrix":
        """Split ``dense`` into tiles, narrowing each tile to its mapped precision."""
        dense = np.asarray(dense, dtype=np.float64)
        m = cls(dense.shape[0], dense.shape[1], nb, map)
        for i in range(m.mt):
            for j in range(m.nt):
                t = m.tiles[i][j]
                t.data[...] = narrow(dense[i * nb:(i + 1) * nb, j * nb:(j + 1) * nb], t.precision)
        return m


def new_tiled_matrix(rows: int, cols: int, nb: int, map: PrecisionMap) -> TiledMatrix:
    return TiledMatrix(rows, cols, nb, map)


def random_stream_tiled(mt: int, nt: int, nb: int, seed: int) -> np.ndarray:
    """The FP64 values ``fill_random`` draws, shaped ``(mt, nt, nb, nb)``.

    Tiles are visited in row-major tile order and elements row-major
    within each tile, from a single generator seeded with ``seed``.
    """
    return Rng64(seed).uniform_block(mt * nt * nb * nb).reshape(mt, nt, nb, nb)


def random_dense_f64(rows: int, cols: int, nb: int, seed: int) -> np.ndarray:
    """Pre-truncation values of ``fill_random`` laid out as a dense row-major array."""
    mt, nt = rows // nb, cols // nb
    stream = random_stream_tiled(mt, nt, nb, seed)
    return stream.transpose(0, 2, 1, 3).reshape(rows, cols)


def fill_random(m: TiledMatrix, seed: int) -> None:
    stream = random_stream_tiled(m.mt, m.nt, m.nb, seed)
    for i in range(m.mt):
        for j in range(m.nt):
            t = m.tiles[i][j]
            t.data[...] = narrow(stream[i, j], t.precision)


def to_dense_f64(m: TiledMatrix) -> np.ndarray:
    out = np.empty((m.rows, m.cols), dtype=np.float64)
    nb = m.nb
    for i in range(m.mt):
        for j in range(m.nt):
            out[i * nb:(i + 1) * nb, j * nb:(j + 1) * nb] = m.tiles[i][j].data
    return out
