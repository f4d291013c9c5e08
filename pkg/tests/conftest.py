import pytest

from fchbilayer.grid import HalfLineGrid
from fchbilayer.potential import PotentialSpec
from fchbilayer.profile1d import solve_homoclinic, solve_u1
from fchbilayer.spectral1d import build_operator


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def spec():
    return PotentialSpec.quartic(1.0, 3.5)


@pytest.fixture(scope="session")
def fine_grid():
    return HalfLineGrid(20.0, 2001)


@pytest.fixture(scope="session")
def grid():
    return HalfLineGrid(12.0, 481)


@pytest.fixture(scope="session")
def u0_fine(spec, fine_grid):
    return solve_homoclinic(spec, fine_grid)


@pytest.fixture(scope="session")
def S_fine(spec, u0_fine):
    return build_operator(u0_fine, spec)


@pytest.fixture(scope="session")
def u0(spec, grid):
    return solve_homoclinic(spec, grid)


@pytest.fixture(scope="session")
def S(spec, u0):
    return build_operator(u0, spec)


@pytest.fixture(scope="session")
def u1_und(S):
    """gamma = 1, eta_d = -2: undulation regime."""
    return solve_u1(S, 1.0, -2.0)
