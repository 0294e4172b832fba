import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cgkit.core import RngStream
from cgkit.problems import default_x_star, make_quadratic

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def quad20():
    """Interpolating quadratic, d = 20, minimiser interior to the unit L1 ball."""
    return make_quadratic(20, 20, 10.0, default_x_star(20), RngStream(7, 1))


@pytest.fixture
def rng():
    return RngStream(12345, 0)


def naive_dot(a, b):
    s = 0.0
    for u, v in zip(a, b):
        s += u * v
    return s


def allclose(a, b, tol):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record and assert one acceptance line: ``criterion(id, passed, detail)``."""
    def record(cid, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {cid}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: _order(s)):
            terminalreporter.write_line(line)


def _order(line):
    cid = line.split("criterion ", 1)[1].split(":", 1)[0]
    num = "".join(ch for ch in cid if ch.isdigit())
    return (int(num) if num else 0, cid)
