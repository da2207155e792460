import pytest

from soapfilm.grid import LAMBDA_CYL

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def branch_16():
    """Converged part of the sigma = 1.6 branch on the default grids (spacing 0.005)."""
    from soapfilm import stationary

    return stationary.continue_branch(LAMBDA_CYL - 0.02, LAMBDA_CYL + 0.015, 8, 1.6)


@pytest.fixture(scope="session")
def branch_window_16():
    """Outcome of continuation over lambda_cyl +- 0.02 (9 steps) at sigma = 1.6.

    Returns ``(branch, error)``; ``error`` is the BranchError when some step
    failed, in which case ``branch`` holds the converged points.
    """
    from soapfilm import stationary

    try:
        return stationary.continue_branch(LAMBDA_CYL - 0.02, LAMBDA_CYL + 0.02, 9, 1.6), None
    except stationary.BranchError as exc:
        return exc.partial, exc


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
