import numpy as np
import pytest

from dynperc.environment import CoupledEnvironment, sample_environment
from dynperc.lattice import BoxLattice, SimulationParams, build_lattice


@pytest.fixture(scope="session")
def small_params():
    return SimulationParams(n=16, samples=8, seed=7)


@pytest.fixture(scope="session")
def small_lattice(small_params):
    return build_lattice(small_params)


@pytest.fixture
def small_env(small_lattice, small_params):
    return sample_environment(small_lattice, small_params, 0)


def all_open_env(d=2, side=10, M=5):
    lat = BoxLattice(d, side)
    return CoupledEnvironment.from_arrays(lat, np.ones(lat.n_edges, dtype=bool), p=1.0, M=M)
