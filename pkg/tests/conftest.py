import numpy as np
import pytest

from avgdist.categorical import SupportGrid
from avgdist.config import bundled_spec_path, parse_experiment
from avgdist.mrp import MarkovRewardProcess


def random_mrp(rng, num_states=None, max_atoms=2, min_prob=0.02):
    """Random irreducible aperiodic MRP: dirichlet rows floored away from
    zero, reward laws with 1..max_atoms atoms in [0, 1]."""
    m = num_states or int(rng.integers(3, 6))
    P = rng.dirichlet(np.ones(m) * 2.0, size=m)
    P = np.maximum(P, min_prob)
    P /= P.sum(axis=1, keepdims=True)
    laws = {}
    for i in range(m):
        for j in range(m):
            n = int(rng.integers(1, max_atoms + 1))
            values = np.sort(rng.uniform(0.0, 1.0, size=n))
            probs = rng.dirichlet(np.ones(n))
            laws[(i, j)] = (values, probs)
    return MarkovRewardProcess(m, P, laws)


def random_family(rng, num_states, grid):
    return rng.dirichlet(np.ones(grid.num_atoms), size=num_states)


def random_exact_family(rng, num_states, lo=-2.0, hi=2.0, max_atoms=4):
    laws = []
    for _ in range(num_states):
        n = int(rng.integers(1, max_atoms + 1))
        locs = np.sort(rng.uniform(lo, hi, size=n))
        laws.append((locs, rng.dirichlet(np.ones(n))))
    from avgdist.categorical import ExactLawFamily

    return ExactLawFamily(laws)


@pytest.fixture(scope="session")
def five_state_spec():
    return parse_experiment(bundled_spec_path("five_state"))


@pytest.fixture(scope="session")
def five_state_mrp(five_state_spec):
    return five_state_spec.mrp


@pytest.fixture(scope="session")
def five_state_grid(five_state_spec):
    return five_state_spec.grid


@pytest.fixture
def small_grid():
    return SupportGrid.from_range(0.0, 2.0, 3)
