import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("nosignal", database=None, max_examples=50, deadline=None)
settings.load_profile("nosignal")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def random_2x2():
    g = np.random.default_rng(1234)

    def draw():
        return g.normal(size=(2, 2)) + 1j * g.normal(size=(2, 2))

    return draw


def random_density(g, dim=2):
    a = g.normal(size=(dim, dim)) + 1j * g.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
