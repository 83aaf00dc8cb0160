import os

import pytest
from hypothesis import HealthCheck, settings

from gundystein import arith
from gundystein.filtration import Filtration

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

Q = arith.Q
FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")


def fixture_path(name):
    return os.path.normpath(os.path.join(FIXTURES, name))


def two_point(p, horizon=2):
    """F_1 trivial, F_n = sigma(E) for n >= 2."""
    p = Q(p)
    levels = [[("Omega", None, 1)]]
    for n in range(2, horizon + 1):
        pe = "Omega" if n == 2 else f"E{n - 1}"
        pc = "Omega" if n == 2 else f"Ec{n - 1}"
        levels.append([(f"E{n}", pe, p), (f"Ec{n}", pc, 1 - p)])
    return Filtration.from_levels(levels)


def binary_tree(depth):
    levels = [[("0", None, Q(1, 2)), ("1", None, Q(1, 2))]]
    for n in range(2, depth + 1):
        levels.append([(a + c, a, Q(1, 2 ** n)) for a, _, _ in levels[-1] for c in "01"])
    return Filtration.from_levels(levels)


@pytest.fixture
def fig_two_point():
    return two_point(Q(1, 4))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
