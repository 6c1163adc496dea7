import math

import numpy as np
import pytest

import floqsim as fs
from floqsim.disorder import derive_seed


@pytest.fixture(scope="session")
def lattice33():
    return fs.build_lattice(3, 3)


@pytest.fixture(scope="session")
def lattice44():
    return fs.build_lattice(4, 4)


@pytest.fixture(scope="session")
def ergodic44():
    """Deep-ergodic 4x4 state: J/pi = 0.14, n_F = 4."""
    lattice = fs.build_lattice(4, 4)
    circuit = fs.build_floquet_circuit(lattice, 0.14 * math.pi, 4, 7)
    return fs.evolve(fs.neel_state(lattice), circuit)


def evolved_state(lattice, j_over_pi, n_cycles, seed):
    circuit = fs.build_floquet_circuit(lattice, j_over_pi * math.pi, n_cycles, seed)
    return fs.evolve(fs.neel_state(lattice), circuit)


@pytest.fixture(scope="session")
def evolved_states_33(lattice33):
    """Mixed-coupling ensemble of 3x3 evolved states for property suites."""
    states = []
    for idx, jp in enumerate((0.01, 0.07, 0.14)):
        for r in range(6):
            states.append(evolved_state(lattice33, jp, 2, derive_seed(idx, r)))
    return states


def random_sector_state(n, weight, seed):
    from floqsim.rmt import sector_haar_state

    return sector_haar_state(n, weight, np.random.default_rng(seed))
