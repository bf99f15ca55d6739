import numpy as np
import pytest

from fwal._rng import make_rng
from fwal.envs import random_tiny_mdp
from fwal.mdp import MdpSpec


def single_state(gamma=0.9, n_actions=1, phi=(1.0,)):
    P = np.ones((n_actions, 1, 1))
    return MdpSpec(P, gamma, np.array([1.0]), np.array([phi]))


def two_state_chain(gamma=0.5):
    """s0 -> s1 deterministically, s1 absorbing; phi(s0)=(1,0), phi(s1)=(0,1)."""
    P = np.array([[[0.0, 1.0], [0.0, 1.0]]])
    return MdpSpec(P, gamma, np.array([1.0, 0.0]), np.array([[1.0, 0.0], [0.0, 1.0]]))


def two_by_two():
    """2 states, 2 actions: action 0 stays, action 1 switches."""
    P = np.array(
        [
            [[1.0, 0.0], [0.0, 1.0]],
            [[0.0, 1.0], [1.0, 0.0]],
        ]
    )
    return MdpSpec(P, 0.9, np.array([1.0, 0.0]), np.array([[1.0, 0.0], [0.0, 1.0]]))


def tiny(seed, n_states=3, n_actions=2, k=2, gamma=0.9):
    return random_tiny_mdp(make_rng(seed, 99), n_states, n_actions, k, gamma)


@pytest.fixture
def chain():
    return two_state_chain()


@pytest.fixture
def switch_mdp():
    return two_by_two()
