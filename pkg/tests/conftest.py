import dataclasses
import math

import numpy as np
import pytest

from mfgtraffic.config import CongestionKernel, ModelParams, initial_density
from mfgtraffic.fixed_point import run_algorithm1
from mfgtraffic.fk import check_cfl
from mfgtraffic.grid import PhaseGrid
from mfgtraffic.trajectory import TimeGrid

DESK_NX = 50
DESK_T = 5.0


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def grid(params):
    return PhaseGrid.from_params(params, DESK_NX)


@pytest.fixture
def small_grid(params):
    return PhaseGrid.from_params(params, 16)


def cost_free(params, **extra):
    """Zero running cost: no congestion and no speed reward (beta = inf)."""
    return dataclasses.replace(params, beta=math.inf, **extra)


def uniform_density(grid):
    return np.full(grid.shape, 1.0 / (grid.L * grid.s_max))


@pytest.fixture(scope="session")
def desk_run():
    """The desk-scale game solved once: Nx = 50, T = 5 s, CFL step, 30 iterations."""
    params = ModelParams(T=DESK_T)
    grid = PhaseGrid.from_params(params, DESK_NX)
    tg = TimeGrid.from_horizon(params.T, None, 1, check_cfl(grid, None, params).tau_max)
    result = run_algorithm1(initial_density(grid), grid, tg, params, 30, CongestionKernel(),
                            run_all=True)
    return params, grid, tg, result


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number, title, ok, detail):
    """Store the criterion verdict for the end-of-run summary, then return ``ok``."""
    ACCEPTANCE_LINES[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
