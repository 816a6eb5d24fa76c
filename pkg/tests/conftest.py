import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncphi4.boundary import ModelParams, SolverConfig, solve
from ncphi4.two_point import TwoPointEvaluator

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sol01():
    return solve(ModelParams(0.1), SolverConfig())


@pytest.fixture(scope="session")
def ev01(sol01):
    return TwoPointEvaluator.from_solution(sol01)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
