import itertools

import numpy as np
import pytest

from rewardcentroids.mdp import PolicyTable, TabularMdp


def enumerate_optimal_values(mdp: TabularMdp, reward: np.ndarray) -> np.ndarray:
    """Brute-force V*: exact linear solve for every deterministic policy."""
    S, A = mdp.num_states, mdp.num_actions
    best = np.full(S, -np.inf)
    for actions in itertools.product(range(A), repeat=S):
        actions = np.array(actions)
        p_pi = mdp.transitions[np.arange(S), actions]
        r_pi = reward[np.arange(S), actions]
        v = np.linalg.solve(np.eye(S) - mdp.discount * p_pi, r_pi)
        best = np.maximum(best, v)
    return best


def one_state_mdp(gamma: float = 0.9, num_actions: int = 2) -> TabularMdp:
    return TabularMdp(1, num_actions, 0, np.ones((1, num_actions, 1)), gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def det_policy(actions, num_actions: int) -> PolicyTable:
    return PolicyTable.from_actions(actions, num_actions)
