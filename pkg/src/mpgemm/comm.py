"""Virtual distributed-memory accounting for SUMMA on a 2D block-cyclic grid.

Nothing is sent anywhere: the simulator walks the task set, places each
task on the owner of its C tile and records which A/B tiles would have to
travel there. Tiles travel in their stored precision (conversion happens
at the receiver), so bytes depend on the source map and message counts
do not.
"""
from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .precision_map import PrecisionMap
from .runtime import ShapeMismatchError, TaskGraph
from .tiles import Precision


@dataclass(frozen=True)
class ProcessGrid:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError(f"process grid must be at least 1x1, got {self.p}x{self.q}")

    @property
    def size(self) -> int:
        return self.p * self.q

    def rank(self, r: int, c: int) -> int:
        return r * self.q + c

    @classmethod
    def parse(cls, text: str) -> "ProcessGrid":
        try:
            p, q = text.lower().split("x")
            return cls(int(p), int(q))
        except ValueError:
            raise ValueError(f"bad grid {text!r}, expected PxQ") from None

    def __str__(self):
        return f"{self.p}x{self.q}"


def owner(grid: ProcessGrid, tile: tuple[int, int]) -> int:
    row, col = tile
    return grid.rank(row % grid.p, col % grid.q)


def default_grid(ranks: int) -> ProcessGrid:
    """Most nearly square ``p x q`` factorisation with ``p <= q``."""
    if ranks < 1:
        raise ValueError(f"ranks must be >= 1, got {ranks}")
    p = max(d for d in range(1, math.isqrt(ranks) + 1) if ranks % d == 0)
    return ProcessGrid(p, ranks // p)


@dataclass(frozen=True)
class CommRecord:
    src_rank: int
    dst_rank: int
    matrix: str
    row: int
    col: int
    iteration: int
    bytes: int
    precision: Precision


@dataclass
class CommReport:
    records: list[CommRecord] = field(default_factory=list)
    per_rank_recv: dict[int, int] = field(default_factory=dict)

    @property
    def messages(self) -> int:
        return len(self.records)

    @property
    def bytes_fp64(self) -> int:
        return sum(r.bytes for r in self.records if r.precision is Precision.FP64)

    @property
    def bytes_fp32(self) -> int:
        return sum(r.bytes for r in self.records if r.precision is Precision.FP32)

    @property
    def bytes_total(self) -> int:
        return sum(r.bytes for r in self.records)

    def count(self, matrix: str) -> int:
        return sum(1 for r in self.records if r.matrix == matrix)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("src,dst,matrix,row,col,l,precision,bytes\n")
        for r in self.records:
            out.write(f"{r.src_rank},{r.dst_rank},{r.matrix},{r.row},{r.col},{r.iteration},"
                      f"{r.precision.name},{r.bytes}\n")
        out.write("\n# summary\n")
        out.write(f"messages,{self.messages}\n")
        out.write(f"bytes_total,{self.bytes_total}\n")
        out.write(f"bytes_fp64,{self.bytes_fp64}\n")
        out.write(f"bytes_fp32,{self.bytes_fp32}\n")
        for rank in sorted(self.per_rank_recv):
            out.write(f"recv_rank_{rank},{self.per_rank_recv[rank]}\n")
        return out.getvalue()


def simulate_summa(g: TaskGraph, grid: ProcessGrid, a_map: PrecisionMap, b_map: PrecisionMap,
                   nb: int, rebroadcast_per_iter: bool = False) -> CommReport:
    """Enumerate the A/B tile transfers of owner-computes SUMMA.

    Tasks are visited in ``l, i, j`` order. A tile is shipped to a given
    rank once for the whole run (tiles are immutable); with
    ``rebroadcast_per_iter`` the dedup key also includes ``l``, which only
    matters when the same tile could be reused across iterations.
    """
    if a_map.shape != (g.mt, g.kt):
        raise ShapeMismatchError(f"A map shape {a_map.shape} != {(g.mt, g.kt)}")
    if b_map.shape != (g.kt, g.nt):
        raise ShapeMismatchError(f"B map shape {b_map.shape} != {(g.kt, g.nt)}")
    report = CommReport()
    recv = defaultdict(int)
    seen = set()

    def need(matrix: str, tile: tuple[int, int], prec: Precision, dst: int, l: int):
        src = owner(grid, tile)
        if src == dst:
            return
        key = (matrix, tile, dst, l) if rebroadcast_per_iter else (matrix, tile, dst)
        if key in seen:
            return
        seen.add(key)
        nbytes = nb * nb * prec.width
        report.records.append(CommRecord(src, dst, matrix, tile[0], tile[1], l, nbytes, prec))
        recv[dst] += nbytes

    for t in g.tasks():
        dst = owner(grid, (t.i, t.j))
        need("A", (t.i, t.l), a_map[t.i, t.l], dst, t.l)
        need("B", (t.l, t.j), b_map[t.l, t.j], dst, t.l)
    report.per_rank_recv = {r: recv.get(r, 0) for r in range(grid.size)}
    return report
