import pytest

from multireset.analytics import ModelParams
from multireset.ladder import solve_ladder

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fig_params():
    return ModelParams(r=0.03, delta=0.04, sigma=0.4, T=1.0, K=1.0)


@pytest.fixture(scope="session")
def ladder400(fig_params):
    return solve_ladder(4, fig_params, n_steps=400)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
