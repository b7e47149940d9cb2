import sys

import numpy as np
import pytest

from spinemc import bbm_model, finite_type_model, martingale_spec


@pytest.fixture
def bbm():
    return bbm_model(1.0)


@pytest.fixture
def bbm_half():
    """p0 = p2 = 1/2: each fission leaves 1 or 3 children, m = 1."""
    return bbm_model(1.0, offspring=[[0.5, 0.0, 0.5]])


@pytest.fixture
def two_type():
    return finite_type_model([1.0, 2.0], [1.0, 2.0], 1.0, [[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def spec_half(bbm):
    return martingale_spec(bbm, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(acceptance, "CRITERION_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
