from functools import lru_cache

import numpy as np
import pytest

from torus_control import EigenvalueTable, build_control_operator, builtin_symbol

BUILTINS = ("zk", "bo2d", "bozk", "dgbozk:1.5")

# filled by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def operator(radius: int):
    return build_control_operator(radius)


@lru_cache(maxsize=None)
def table(model: str, radius: int):
    return EigenvalueTable.build(builtin_symbol(model), radius)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gauss_legendre(T: float, panels: int = 400, order: int = 20):
    """Composite Gauss-Legendre nodes and weights on [0, T]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, T, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return t, wt


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
