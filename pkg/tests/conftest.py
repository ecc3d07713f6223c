import numpy as np
import pytest

from lipsparse.core import Dataset, GroupPartition

# acceptance lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_classification(rng, n, p, groups=None):
    X = rng.standard_normal((n, p))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return Dataset(X, y, groups)


def random_regression(rng, n, p):
    X = rng.standard_normal((n, p))
    return Dataset(X, X @ rng.standard_normal(p) + rng.standard_normal(n))


@pytest.fixture
def small_clf(rng):
    return random_classification(rng, 20, 6, GroupPartition.contiguous(6, 2))


@pytest.fixture
def small_reg(rng):
    return random_regression(rng, 25, 5)
