import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from hsvi import Belief, PomdpModel  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_deterministic_model(gamma=0.9):
    """2-state deterministic cycle with perfect observations."""
    t = np.zeros((1, 2, 2))
    t[0, 0, 1] = 1.0
    t[0, 1, 0] = 1.0
    o = np.zeros((1, 2, 2))
    o[0, 0, 0] = 1.0
    o[0, 1, 1] = 1.0
    r = np.array([[1.0, 0.0]])
    return PomdpModel(t, o, r, gamma, Belief.point_mass(0, 2))


def zero_reward_model(num_states=2, num_actions=2, num_observations=2, gamma=0.95):
    rng = np.random.default_rng(0)
    t = rng.dirichlet(np.ones(num_states), size=(num_actions, num_states))
    o = rng.dirichlet(np.ones(num_observations), size=(num_actions, num_states))
    r = np.zeros((num_actions, num_states))
    return PomdpModel(t, o, r, gamma, Belief.uniform(num_states))


@pytest.fixture
def random_model(rng):
    return oracles.random_pomdp(rng, 3, 2, 2, 0.9)
