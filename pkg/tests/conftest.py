"""Shared fixtures: small grids, seeded generators and the acceptance line collector."""

from __future__ import annotations

import numpy as np
import pytest

from besov_euler_lab.grid import GridSpec, create_grid, get_preset
from besov_euler_lab.littlewood_paley import build_filter_bank

_CRITERION_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs the desk preset")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERION_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def report(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {title} ({detail})"
        print(line)
        _CRITERION_LINES.append(line)
        return passed

    return report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cube16():
    """16^3 grid with unit frequency spacing; blocks -1..2 are resolved."""
    return create_grid(GridSpec((16, 16, 16), (1.0, 1.0, 1.0)))


@pytest.fixture(scope="session")
def small_grid():
    """Anisotropic grid long enough in x1 to host a carrier but cheap to transform."""
    return create_grid(GridSpec((256, 16, 16), (1 / 16, 1 / 16, 1 / 16)))


@pytest.fixture(scope="session")
def carrier_grid():
    """Fine x1 lattice that hosts the carriers for n = 3, 4, 5 at low transverse cost."""
    return create_grid(GridSpec((4096, 16, 16), (1 / 16, 1 / 16, 1 / 16)))


@pytest.fixture(scope="session")
def ci_grid():
    return create_grid(get_preset("ci").spec)


@pytest.fixture(scope="session")
def ci_bank(ci_grid):
    return build_filter_bank(ci_grid)
