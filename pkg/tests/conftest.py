import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mole2d.graph import build_graph
from mole2d.synth import circle_graph, random_connected_instance

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# A..H -> 0..7; edge ids 0..8 are the figure's edges 1..9
FIG1_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 2), (6, 7), (7, 0)]


@pytest.fixture
def fig1():
    return build_graph(8, [(t, h, 0.1, 1.0) for t, h in FIG1_EDGES])


@pytest.fixture
def counterexample():
    return circle_graph(18, 0.2, "fixed")


def random_instance(seed, n=None, extra=None, sigma=(0.05, 0.3), noise=True):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12)) if n is None else n
    extra = int(rng.integers(1, 6)) if extra is None else extra
    return random_connected_instance(rng, n, extra, sigma, noise)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULT_LINES

    if RESULT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in RESULT_LINES:
            terminalreporter.write_line(line)
