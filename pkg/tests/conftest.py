import functools

import numpy as np
import pytest

from smallscat.emcore import WaveContext
from smallscat.shape import make_icosphere

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def unit_sphere(refinement):
    return make_icosphere(1.0, refinement)


@pytest.fixture
def ctx():
    return WaveContext.from_wavenumber(1.0)


@pytest.fixture
def rng():
    # fixed seed: tests only, the library itself never draws random numbers
    return np.random.default_rng(20240611)


def fd_grad(f, x, h):
    """Central-difference gradient of a scalar function of a 3-vector."""
    out = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(out)


def fd_jacobian(F, x, h):
    """``J[i, j] = d F_i / d x_j`` by central differences."""
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((F(x + e) - F(x - e)) / (2 * h))
    return np.stack(cols, axis=1)


def fd_curl(F, x, h):
    J = fd_jacobian(F, x, h)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_div(F, x, h):
    return np.trace(fd_jacobian(F, x, h))
