"""Shared fixtures.  Perron sweeps are the expensive part of the suite, so
each fixture zero set is swept once per session."""

import functools

import numpy as np
import pytest

from hypermetric.blaschke import MultiplicitySequence
from hypermetric.maximal import perron_sweep

PERRON_FIXTURES = {
    "origin": [0],
    "origin-double": [0, 0],
    "real": [0.4],
    "pair": [0.3, -0.3j],
    "four": [0.5, -0.45j, -0.2 + 0.3j, 0.6 + 0.5j],
}

# lines printed by the acceptance suite, repeated in the terminal summary
ACCEPTANCE_LINES: list = []


@functools.lru_cache(maxsize=None)
def swept(name: str):
    C = MultiplicitySequence.from_points(PERRON_FIXTURES[name])
    lam, report = perron_sweep(C)
    return C, lam, report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_disk_points(rng, n, r_max=0.95):
    return r_max * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda t: int(t.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
