import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from tropadel.lattice import affine_space, product_of_lines, projective_space

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def p1():
    return projective_space(1)


@pytest.fixture
def p2():
    return projective_space(2)


@pytest.fixture
def p1p1():
    return product_of_lines(2)


@pytest.fixture
def a2():
    return affine_space(2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
