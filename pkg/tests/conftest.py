from __future__ import annotations

import numpy as np
import pytest

from pbgcorr import EmitterParams, ReservoirParams, SolverConfig, solve_amplitude

_CRITERIA: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Queue one line for the end-of-run acceptance table."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}"
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_reservoir():
    return ReservoirParams()


@pytest.fixture(scope="session")
def default_trajectory(default_reservoir):
    """eta = 0.2, omega_0 = 0.1, dt = 0.01, t_max = 50."""
    return solve_amplitude(default_reservoir, EmitterParams(0.1), SolverConfig())


@pytest.fixture(scope="session")
def far_detuned_trajectory(default_reservoir):
    """eta = 0.2, omega_0 = 10, dt = 0.01, t_max = 50."""
    return solve_amplitude(default_reservoir, EmitterParams(10.0), SolverConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
