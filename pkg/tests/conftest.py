import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pkg", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")


@pytest.fixture
def quiet():
    """Silence the under-resolution warning on coarse test grids."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


@pytest.fixture
def criterion(request):
    """``criterion(n, checks)`` prints and records one PASS/FAIL line.

    ``checks`` maps a short label to a bool; the line lists the failing labels.
    """
    def report(n, checks, detail=""):
        ok = all(checks.values())
        bad = [k for k, v in checks.items() if not v]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        if bad:
            line += f"  [failed: {'; '.join(bad)}]"
        print(line)
        request.config.stash[_CRITERIA].append(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
