import pytest

from railcommute.core import TABLE2_COST, TABLE2_PARAMS, DemandWT1
from railcommute.equilibrium import InflowProfile, solve_wt1

# criterion lines collected by test_acceptance, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return TABLE2_PARAMS


@pytest.fixture(scope="session")
def cost():
    return TABLE2_COST


@pytest.fixture(scope="session")
def base_solution():
    """Constant inflow 12 tr/h, 30000 passengers, t* = 4 h."""
    return solve_wt1(TABLE2_PARAMS, TABLE2_COST, DemandWT1(4.0, 30000.0), InflowProfile.constant(12.0))


@pytest.fixture(scope="session")
def low_demand_solution():
    return solve_wt1(TABLE2_PARAMS, TABLE2_COST, DemandWT1(4.0, 3000.0), InflowProfile.constant(12.0))
