import pytest

from svi_epp.model import validate_params

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def params():
    return validate_params(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def u_default(params):
    """PDE solution on the default grid, T = 1, shared across modules."""
    from svi_epp.exit_prob import Grid2D, solve_u

    return solve_u(Grid2D(), params, save_times=[0.0, 0.25, 0.5, 0.75, 1.0])


@pytest.fixture(scope="session")
def u_coarse(params):
    from svi_epp.exit_prob import Grid2D, solve_u

    return solve_u(Grid2D(n_y=81, n_z=81, n_t=800), params, save_times=[0.0, 0.5, 1.0])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
