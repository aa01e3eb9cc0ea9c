"""Offline centroid estimation from expert trajectories.

The OPT estimator only needs the visited states and pairs; MCE and BIRL
estimate the expert policy from first-visit counts, clip it at a floor
pi_min_prime to keep the logs finite, and take logarithms.  Sample-size
requirements for each estimator are available in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mdp import (
    PolicyTable,
    RewardTable,
    TabularMdp,
    reachable_support,
    transition_matrix,
)


@dataclass(frozen=True)
class TrajectoryDataset:
    """N state-action trajectories of shared length H."""

    states: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        actions = np.asarray(self.actions, dtype=np.int64)
        if states.ndim != 2 or states.shape != actions.shape:
            raise DomainError("states and actions must be N x H integer arrays")
        if states.shape[1] < 1:
            raise DomainError("trajectories must have length >= 1")
        if np.any(states < 0) or np.any(actions < 0):
            raise DomainError("state/action indices must be nonnegative")
        states = states.copy()
        actions = actions.copy()
        states.setflags(write=False)
        actions.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)

    @property
    def num_trajectories(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class VisitCounts:
    """nsa(s, a) trajectories whose first visit to s played a; ns = row sums."""

    nsa: np.ndarray
    ns: np.ndarray

    def __post_init__(self):
        nsa = np.asarray(self.nsa, dtype=np.int64)
        ns = np.asarray(self.ns, dtype=np.int64)
        if nsa.ndim != 2 or ns.shape != (nsa.shape[0],):
            raise DomainError("inconsistent count shapes")
        if np.any(nsa < 0) or np.any(nsa.sum(axis=1) != ns):
            raise DomainError("counts must be nonnegative with ns = sum_a nsa")
        object.__setattr__(self, "nsa", nsa)
        object.__setattr__(self, "ns", ns)


def _check_dims(data: TrajectoryDataset, dims: tuple[int, int]) -> tuple[int, int]:
    S, A = dims
    if S < 1 or A < 1:
        raise DomainError("dims must be positive")
    if data.states.max() >= S or data.actions.max() >= A:
        raise DomainError("trajectory index out of range for the given dims")
    return S, A


def simulate_expert(
    mdp: TabularMdp, expert: PolicyTable, n: int, h: int, seed: int
) -> TrajectoryDataset:
    """Roll out n i.i.d. length-h trajectories of the expert from the initial state.

    Deterministic given (seed, n, h); the sampler draws from a single
    counter-based stream in a fixed order, so the result does not depend on
    how the work is scheduled.
    """
    if n < 1 or h < 1:
        raise DomainError("n and h must be >= 1")
    if expert.probs.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError("expert shape does not match the MDP")
    rng = np.random.Generator(np.random.Philox(key=seed))
    policy_cdf = np.cumsum(expert.probs, axis=1)
    trans_cdf = np.cumsum(mdp.transitions, axis=2)
    states = np.empty((n, h), dtype=np.int64)
    actions = np.empty((n, h), dtype=np.int64)
    states[:, 0] = mdp.initial_state
    for t in range(h):
        cur = states[:, t]
        u = rng.random(n)
        actions[:, t] = np.minimum(
            (policy_cdf[cur] < u[:, None]).sum(axis=1), mdp.num_actions - 1
        )
        if t + 1 < h:
            u2 = rng.random(n)
            states[:, t + 1] = np.minimum(
                (trans_cdf[cur, actions[:, t]] < u2[:, None]).sum(axis=1),
                mdp.num_states - 1,
            )
    return TrajectoryDataset(states=states, actions=actions)


def first_visit_counts(
    data: TrajectoryDataset, dims: tuple[int, int], count_all: bool = False
) -> VisitCounts:
    """Action counts at the first visit of each state per trajectory.

    With count_all=True every occurrence is counted instead; the estimators
    accept both modes, but the analysis holds for first visits.
    """
    S, A = _check_dims(data, dims)
    nsa = np.zeros((S, A), dtype=np.int64)
    if count_all:
        np.add.at(nsa, (data.states.ravel(), data.actions.ravel()), 1)
    else:
        visited = np.zeros((data.num_trajectories, S), dtype=bool)
        rows = np.arange(data.num_trajectories)
        for t in range(data.horizon):
            s_t = data.states[:, t]
            fresh = ~visited[rows, s_t]
            np.add.at(nsa, (s_t[fresh], data.actions[fresh, t]), 1)
            visited[rows, s_t] = True
    return VisitCounts(nsa=nsa, ns=nsa.sum(axis=1))


def estimate_opt(data: TrajectoryDataset, dims: tuple[int, int]) -> RewardTable:
    """OPT centroid estimate: 1 on visited pairs, 1/A on unvisited states, else 0."""
    S, A = _check_dims(data, dims)
    visited_pair = np.zeros((S, A), dtype=bool)
    visited_pair[data.states.ravel(), data.actions.ravel()] = True
    values = np.zeros((S, A))
    values[visited_pair] = 1.0
    unvisited = ~visited_pair.any(axis=1)
    values[unvisited, :] = 1.0 / A
    return RewardTable(values)


def _clipped_policy(counts: VisitCounts, pi_min_prime: float) -> np.ndarray:
    freq = counts.nsa / np.maximum(1, counts.ns)[:, None]
    observed_low = (counts.nsa > 0) & (freq < pi_min_prime)
    if np.any(observed_low):
        warnings.warn(
            "observed action frequencies below pi_min_prime; the estimation "
            "guarantee assumes the true policy stays above the floor",
            stacklevel=3,
        )
    return np.maximum(pi_min_prime, freq)


def _check_pi_min_prime(pi_min_prime: float) -> None:
    if not (0.0 < pi_min_prime < 1.0):
        raise DomainError("pi_min_prime must lie in (0, 1)")


DEFAULT_PI_MIN_PRIME = 1e-6


def estimate_mce(
    data: TrajectoryDataset,
    dims: tuple[int, int],
    pi_min_prime: float = DEFAULT_PI_MIN_PRIME,
    count_all: bool = False,
) -> RewardTable:
    """Log of the clipped empirical policy."""
    _check_pi_min_prime(pi_min_prime)
    counts = first_visit_counts(data, dims, count_all=count_all)
    return RewardTable(np.log(_clipped_policy(counts, pi_min_prime)))


def estimate_birl(
    data: TrajectoryDataset,
    dims: tuple[int, int],
    pi_min_prime: float = DEFAULT_PI_MIN_PRIME,
    count_all: bool = False,
) -> RewardTable:
    """Row-max-normalized log of the clipped empirical policy.

    Rows of never-visited states are set to log(pi_min_prime) wholesale.
    """
    _check_pi_min_prime(pi_min_prime)
    counts = first_visit_counts(data, dims, count_all=count_all)
    pi_hat = _clipped_policy(counts, pi_min_prime)
    values = np.log(pi_hat) - np.log(pi_hat.max(axis=1, keepdims=True))
    values[counts.ns == 0, :] = np.log(pi_min_prime)
    return RewardTable(values)


def exact_estimate_mce(
    expert: PolicyTable, support: frozenset[int] | set[int], pi_min_prime: float = DEFAULT_PI_MIN_PRIME
) -> RewardTable:
    """Infinite-data limit of the MCE estimator for a known expert."""
    _check_pi_min_prime(pi_min_prime)
    S, A = expert.probs.shape
    values = np.full((S, A), np.log(pi_min_prime))
    rows = sorted(int(s) for s in support)
    values[rows] = np.log(np.maximum(pi_min_prime, expert.probs[rows]))
    return RewardTable(values)


def exact_estimate_birl(
    expert: PolicyTable, support: frozenset[int] | set[int], pi_min_prime: float = DEFAULT_PI_MIN_PRIME
) -> RewardTable:
    """Infinite-data limit of the BIRL estimator for a known expert."""
    _check_pi_min_prime(pi_min_prime)
    S, A = expert.probs.shape
    values = np.full((S, A), np.log(pi_min_prime))
    rows = sorted(int(s) for s in support)
    clipped = np.maximum(pi_min_prime, expert.probs[rows])
    values[rows] = np.log(clipped) - np.log(clipped.max(axis=1, keepdims=True))
    return RewardTable(values)


def p_min_h(mdp: TabularMdp, expert: PolicyTable, h: int) -> float:
    """Minimum visit probability over the support within the first h states.

    A length-h trajectory holds states s_1 .. s_h with s_1 fixed at the
    initial state, so h - 1 transition steps are taken.  For each support
    state the chain is made absorbing there and the absorbed mass after the
    h - 1 steps is read off; the minimum over the support is returned.
    """
    if h < 1:
        raise DomainError("h must be >= 1")
    chain = transition_matrix(mdp, expert)
    best = 1.0
    for s in sorted(reachable_support(mdp, expert)):
        if s == mdp.initial_state:
            continue
        absorbing = chain.copy()
        absorbing[s, :] = 0.0
        absorbing[s, s] = 1.0
        x = np.zeros(mdp.num_states)
        x[mdp.initial_state] = 1.0
        for _ in range(h - 1):
            x = x @ absorbing
        best = min(best, float(x[s]))
    return best


def sample_bound(
    kind: str,
    *,
    num_states: int,
    num_actions: int,
    support_size: int,
    delta: float,
    p_min: float,
    horizon: int,
    eps: float | None = None,
    pi_min_prime: float | None = None,
) -> int:
    """Trajectory count guaranteeing the estimator's accuracy statement.

    OPT recovers the centroid exactly with probability 1 - delta; MCE and
    BIRL reach sup-norm error eps.  Requires horizon >= num_states, which is
    what makes every support state reachable within one trajectory.
    """
    if horizon < num_states:
        raise DomainError("horizon must be at least the number of states")
    if not (0.0 < delta < 1.0):
        raise DomainError("delta must lie in (0, 1)")
    if not (0.0 < p_min <= 1.0):
        raise DomainError("p_min must lie in (0, 1]")
    if kind == "opt":
        n = math.log(support_size / delta) / p_min
    elif kind in ("mce", "birl"):
        if eps is None or not (0.0 < eps <= 1.0):
            raise DomainError("eps must lie in (0, 1]")
        if pi_min_prime is None or not (0.0 < pi_min_prime < 1.0):
            raise DomainError("pi_min_prime must lie in (0, 1)")
        sa = num_states * num_actions
        if kind == "mce":
            n = 16.0 * math.log(4.0 * sa / delta) ** 2 / (eps**2 * pi_min_prime * p_min)
        else:
            n = 33.0 * math.log(8.0 * sa / delta) ** 2 / (eps**2 * pi_min_prime * p_min)
    else:
        raise DomainError(f"unknown estimator kind {kind!r}")
    return max(1, math.ceil(n))
