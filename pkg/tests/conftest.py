import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import fracdp as F

# numba compiles on first call; wall-clock deadlines would be noise
settings.register_profile(
    "fracdp", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("fracdp")

ALPHAS = (0.3, 0.5, 0.8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def example_start(problem):
    return F.make_initial_position(problem.grid, [F.example_w0(problem.grid.alpha)])


def closed_value(alpha):
    return (1.0 - 2.0 ** (alpha - 1.0)) ** 2


# acceptance criteria report one line each; repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
