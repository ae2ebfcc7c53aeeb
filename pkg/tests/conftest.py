import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fillvol.chains import PolyCycle

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def loop(points, coef=1):
    """Closed polygon through ``points`` in order."""
    p = np.asarray(points, dtype=float)
    verts = np.stack([p, np.roll(p, -1, axis=0)], axis=1)
    return PolyCycle(p.shape[1], 1, verts, np.full(len(p), coef, dtype=np.int64))


SQUARE = [(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)]


@pytest.fixture
def square_loop():
    return loop(SQUARE)


# one pass/fail line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        if not isinstance(ok, str):
            ok = bool(ok)
        status = "PASS" if ok is True else ("FAIL" if ok is False else ok)
        line = f"criterion {number}: {status} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
