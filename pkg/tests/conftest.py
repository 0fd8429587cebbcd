import pytest

from biphoton_qudit_sim.geometry import ExperimentGeometry

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def lab():
    return ExperimentGeometry()


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
