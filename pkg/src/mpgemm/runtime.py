"""SUMMA task graph for tiled GEMM and its sequential and parallel executors.

Task ``(i, j, l)`` reads A(i, l) and B(l, j) and updates C(i, j). The only
dependencies are the reduction chains ``(i, j, l-1) -> (i, j, l)``, so every
C tile has a totally ordered sequence of writers and the summation order
is the same no matter how chains are interleaved across workers.
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .kernels import GemmScalars, mixed_gemm_task
from .precision_map import PrecisionMap
from .tiles import TiledMatrix


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class GemmTask:
    i: int
    j: int
    l: int


@dataclass
class TaskGraph:
    """The implicit set of ``mt * nt * kt`` tasks plus the operands they touch.

    ``a``, ``b`` and ``c`` may be omitted for graphs that are only
    enumerated (communication simulation, flop accounting).
    """

    mt: int
    nt: int
    kt: int
    scalars: GemmScalars = field(default_factory=GemmScalars)
    a: Optional[TiledMatrix] = None
    b: Optional[TiledMatrix] = None
    c: Optional[TiledMatrix] = None
    nb: Optional[int] = None

    @property
    def ntasks(self) -> int:
        return self.mt * self.nt * self.kt

    def tasks(self) -> Iterator[GemmTask]:
        """All tasks in loop order: ``l`` outermost, then ``i``, then ``j``."""
        for l in range(self.kt):
            for i in range(self.mt):
                for j in range(self.nt):
                    yield GemmTask(i, j, l)

    def predecessor(self, t: GemmTask) -> Optional[GemmTask]:
        return GemmTask(t.i, t.j, t.l - 1) if t.l > 0 else None

    def successor(self, t: GemmTask) -> Optional[GemmTask]:
        return GemmTask(t.i, t.j, t.l + 1) if t.l + 1 < self.kt else None

    def task_scalars(self, l: int) -> GemmScalars:
        # beta scales the original C once; later steps accumulate onto the partial result
        if l == 0:
            return self.scalars
        return GemmScalars(self.scalars.alpha, 1.0)

    def run_task(self, t: GemmTask) -> None:
        if self.a is None or self.b is None or self.c is None:
            raise RuntimeError("task graph has no operands attached")
        mixed_gemm_task(self.task_scalars(t.l), self.a.tiles[t.i][t.l],
                        self.b.tiles[t.l][t.j], self.c.tiles[t.i][t.j])


def build_task_graph(A: TiledMatrix, B: TiledMatrix, C: TiledMatrix,
                     scalars: GemmScalars = GemmScalars()) -> TaskGraph:
    if not (A.nb == B.nb == C.nb):
        raise ShapeMismatchError(f"tile sizes differ: A={A.nb}, B={B.nb}, C={C.nb}")
    if A.nt != B.mt:
        raise ShapeMismatchError(f"inner tile dimensions disagree: A has {A.nt} tile columns, "
                                 f"B has {B.mt} tile rows")
    if (C.mt, C.nt) != (A.mt, B.nt):
        raise ShapeMismatchError(f"C tile grid {(C.mt, C.nt)} != {(A.mt, B.nt)}")
    return TaskGraph(A.mt, B.nt, A.nt, scalars, A, B, C, A.nb)


def execute_sequential(g: TaskGraph) -> None:
    for t in g.tasks():
        g.run_task(t)


@dataclass
class ScheduleTrace:
    """Which tasks each worker ran, in execution order."""

    per_worker: list[list[GemmTask]]

    @property
    def counts(self) -> list[int]:
        return [len(w) for w in self.per_worker]


def execute_parallel(g: TaskGraph, workers: int) -> ScheduleTrace:
    """Run the graph on ``workers`` threads, dependency-driven.

    Reduction chains are dealt round-robin to per-worker queues; a finished
    task's successor goes to the front of the same worker's queue so a C tile
    tends to stay with one thread. Idle workers steal from the back of
    other queues. Tile kernels release the GIL.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    queues = [deque() for _ in range(workers)]
    if g.kt > 0:
        for n, (i, j) in enumerate((i, j) for i in range(g.mt) for j in range(g.nt)):
            queues[n % workers].append(GemmTask(i, j, 0))
    trace = ScheduleTrace([[] for _ in range(workers)])
    cond = threading.Condition()
    state = {"remaining": g.ntasks, "error": None}

    def take(w: int) -> Optional[GemmTask]:
        if queues[w]:
            return queues[w].popleft()
        for k in range(1, workers):
            q = queues[(w + k) % workers]
            if q:
                return q.pop()
        return None

    def worker(w: int) -> None:
        while True:
            with cond:
                while True:
                    if state["remaining"] == 0 or state["error"] is not None:
                        return
                    t = take(w)
                    if t is not None:
                        break
                    cond.wait()
            try:
                g.run_task(t)
            except BaseException as exc:  # propagate to the caller
                with cond:
                    state["error"] = exc
                    cond.notify_all()
                return
            trace.per_worker[w].append(t)
            nxt = g.successor(t)
            with cond:
                state["remaining"] -= 1
                if nxt is not None:
                    queues[w].appendleft(nxt)
                cond.notify_all()

    threads = [threading.Thread(target=worker, args=(w,), name=f"gemm-worker-{w}", daemon=True)
               for w in range(workers)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if state["error"] is not None:
        raise state["error"]
    return trace


@dataclass(frozen=True)
class FlopReport:
    flops_fp64: int
    flops_fp32: int
    tasks_fp64: int
    tasks_fp32: int

    @property
    def flops_total(self) -> int:
        return self.flops_fp64 + self.flops_fp32


def flop_report(g: TaskGraph, c_map: PrecisionMap, nb: int) -> FlopReport:
    """Classify flops by each task's operational precision (its C tile's)."""
    if c_map.shape != (g.mt, g.nt):
        raise ShapeMismatchError(f"C map shape {c_map.shape} != {(g.mt, g.nt)}")
    n64 = int(c_map.fp64.sum())
    t64 = g.kt * n64
    t32 = g.kt * (c_map.fp64.size - n64)
    per_task = 2 * nb ** 3
    return FlopReport(per_task * t64, per_task * t32, t64, t32)

