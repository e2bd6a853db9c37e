"""Per-tile precision assignments: generation, statistics, text I/O, heatmaps."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .tiles import Precision, Rng64


class MapParseError(ValueError):
    pass


@dataclass(frozen=True)
class RatioSpec:
    """An ``aD:bS`` configuration: ``d_percent`` FP64 tiles, ``s_percent`` FP32."""

    d_percent: int
    s_percent: int

    def __post_init__(self):
        if not (0 <= self.d_percent <= 100 and 0 <= self.s_percent <= 100):
            raise ValueError(f"percentages out of range: {self.d_percent}:{self.s_percent}")
        if self.d_percent + self.s_percent != 100:
            raise ValueError(f"ratio {self.d_percent}:{self.s_percent} does not sum to 100")

    @classmethod
    def parse(cls, text: str) -> "RatioSpec":
        """Accepts ``"80:20"`` or ``"80D:20S"``."""
        m = re.fullmatch(r"\s*(\d+)\s*[dD]?\s*:\s*(\d+)\s*[sS]?\s*", text)
        if not m:
            raise ValueError(f"bad ratio {text!r}, expected a:b")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def label(self) -> str:
        return f"{self.d_percent}D:{self.s_percent}S"

    def __str__(self):
        return self.label


ALL_DOUBLE = RatioSpec(100, 0)
PAPER_RATIOS = (RatioSpec(100, 0), RatioSpec(80, 20), RatioSpec(50, 50),
                RatioSpec(20, 80), RatioSpec(0, 100))


class PrecisionMap:
    """An ``mt x nt`` grid of tile precisions, stored as a boolean FP64 mask."""

    def __init__(self, fp64_mask):
        mask = np.array(fp64_mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ValueError(f"precision map must be a non-empty 2D grid, got shape {mask.shape}")
        mask.setflags(write=False)
        self.fp64 = mask

    @classmethod
    def uniform(cls, mt: int, nt: int, precision: Precision) -> "PrecisionMap":
        return cls(np.full((mt, nt), precision is Precision.FP64))

    @classmethod
    def from_cells(cls, cells) -> "PrecisionMap":
        return cls([[c is Precision.FP64 for c in row] for row in cells])

    @property
    def shape(self) -> tuple[int, int]:
        return self.fp64.shape

    @property
    def mt(self) -> int:
        return self.fp64.shape[0]

    @property
    def nt(self) -> int:
        return self.fp64.shape[1]

    def __getitem__(self, ij) -> Precision:
        return Precision.FP64 if self.fp64[ij] else Precision.FP32

    def __eq__(self, other):
        if not isinstance(other, PrecisionMap):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.fp64, other.fp64))

    def __hash__(self):
        return hash((self.shape, self.fp64.tobytes()))

    def __repr__(self):
        s = map_stats(self)
        return f"PrecisionMap({self.mt}x{self.nt}, fp64={s.count_fp64}, fp32={s.count_fp32})"


def fp64_count(n_cells: int, ratio: RatioSpec) -> int:
    # round(d/100 * n) with ties away from zero, in exact integer arithmetic
    return (2 * ratio.d_percent * n_cells + 100) // 200


def generate_ratio_map(mt: int, nt: int, ratio: RatioSpec, seed: int) -> PrecisionMap:
    """Mark exactly ``round(d% * mt*nt)`` randomly chosen tiles as FP64.

    A Fisher-Yates shuffle of the linear cell indices (``j = next % (i+1)``
    for ``i`` from the last index down to 1) picks the FP64 cells as the
    first entries of the shuffled order. Because the permutation depends
    only on the seed and grid size, the FP64 set for a higher double
    percentage contains the set for any lower one.
    """
    if mt < 1 or nt < 1:
        raise ValueError(f"tile grid must be at least 1x1, got {mt}x{nt}")
    n = mt * nt
    order = list(range(n))
    rng = Rng64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        order[i], order[j] = order[j], order[i]
    mask = np.zeros(n, dtype=bool)
    mask[order[:fp64_count(n, ratio)]] = True
    return PrecisionMap(mask.reshape(mt, nt))


def matrix_seeds(base_seed: int) -> tuple[int, int, int]:
    """Per-matrix map seeds for A, B and C derived from one base seed."""
    return base_seed + 1, base_seed + 2, base_seed + 3


@dataclass(frozen=True)
class MapStats:
    count_fp64: int
    count_fp32: int
    fraction_fp64: float


def map_stats(map: PrecisionMap) -> MapStats:
    d = int(map.fp64.sum())
    total = map.fp64.size
    return MapStats(d, total - d, d / total)


def serialize_map(map: PrecisionMap) -> str:
    lines = [f"{map.mt} {map.nt}"]
    lines += ["".join("D" if v else "S" for v in row) for row in map.fp64]
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> PrecisionMap:
    if not text.endswith("\n"):
        raise MapParseError("map text must end with a newline")
    lines = text[:-1].split("\n")
    m = re.fullmatch(r"([1-9]\d*) ([1-9]\d*)", lines[0])
    if not m:
        raise MapParseError(f"bad header {lines[0]!r}, expected 'mt nt'")
    mt, nt = int(m.group(1)), int(m.group(2))
    rows = lines[1:]
    if len(rows) != mt:
        raise MapParseError(f"expected {mt} rows, found {len(rows)}")
    mask = np.zeros((mt, nt), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != nt:
            raise MapParseError(f"row {i} has length {len(row)}, expected {nt}")
        for j, ch in enumerate(row):
            if ch == "D":
                mask[i, j] = True
            elif ch != "S":
                raise MapParseError(f"illegal character {ch!r} at row {i}, column {j}")
    return PrecisionMap(mask)


def export_heatmap(map: PrecisionMap, format: str = "pgm") -> bytes:
    """Render the map as CSV (64/32 per cell) or plain PGM (FP64 dark, FP32 light)."""
    fmt = format.lower()
    if fmt == "csv":
        body = "".join(",".join("64" if v else "32" for v in row) + "\n" for row in map.fp64)
    elif fmt == "pgm":
        body = f"P2\n{map.nt} {map.mt}\n255\n"
        body += "".join(" ".join("0" if v else "255" for v in row) + "\n" for row in map.fp64)
    else:
        raise ValueError(f"unknown heatmap format {format!r} (use csv or pgm)")
    return body.encode("ascii")
