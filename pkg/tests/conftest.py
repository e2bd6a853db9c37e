import numpy as np
import pytest

from mpgemm import PrecisionMap, Precision, TiledMatrix, fill_random


def uniform_map(mt, nt, precision=Precision.FP64):
    return PrecisionMap.uniform(mt, nt, precision)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def filled(rows, cols, nb, pmap, seed):
    m = TiledMatrix(rows, cols, nb, pmap)
    fill_random(m, seed)
    return m


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
