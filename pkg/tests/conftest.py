import pytest

from dilute_bose.potentials import square_barrier
from dilute_bose.scattering import solve_zero_energy


@pytest.fixture(scope="session")
def barrier():
    return square_barrier(2.0, 1.0)


@pytest.fixture(scope="session")
def barrier_solution(barrier):
    return solve_zero_energy(barrier, 3.0)
