import numpy as np
import pytest

from survkit import cohort_from_arrays

_ACCEPTANCE = []

# months 1-6 baseline cumulative hazard used in the worked median-time example
TABLE_TIMES = [1, 2, 3, 4, 5, 6]
TABLE_H0 = [0.10, 0.25, 0.40, 0.60, 0.85, 1.10]


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def random_cohort(rng, n=30, p=2, censor=0.3, ties=False):
    """Small random survival cohort; integer times give ties."""
    X = rng.normal(size=(n, p))
    t = rng.exponential(1.0, size=n)
    if ties:
        t = np.ceil(t * 4)
    events = rng.random(n) > censor
    events[0] = True
    return cohort_from_arrays(t, events, X)


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)
