"""Finite MDPs without reward and their dynamic-programming primitives.

The environment is a tuple (states, actions, initial state, transition
tensor, discount).  Everything downstream (feasible-set geometry, centroids,
planning) is built on the operations here: hard and soft value iteration,
policy evaluation as a dense linear solve, occupancy measures from the flow
equations, reachability, and the per-policy normalizer derived from
det(I - gamma * P_pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ROW_SUM_ATOL = 1e-12


def _as_readonly(a, shape, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP without reward.

    transitions[s, a, s'] is the probability of moving to s' when playing a
    in s.  Rows must be probability distributions and 0 <= discount < 1.
    """

    num_states: int
    num_actions: int
    initial_state: int
    transitions: np.ndarray
    discount: float

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1:
            raise DomainError("num_states and num_actions must be positive")
        if not (0 <= self.initial_state < self.num_states):
            raise DomainError("initial_state out of range")
        if not (0.0 <= self.discount < 1.0):
            raise DomainError("discount must lie in [0, 1)")
        p = _as_readonly(
            self.transitions,
            (self.num_states, self.num_actions, self.num_states),
            "transitions",
        )
        if np.any(p < 0):
            raise DomainError("transitions contain negative probabilities")
        row_sums = p.sum(axis=2)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_ATOL):
            raise DomainError("each (s, a) transition row must sum to 1")
        object.__setattr__(self, "transitions", p)


@dataclass(frozen=True)
class RewardTable:
    """Dense S x A reward table."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise DomainError("reward values must be a 2-d table")
        if not np.all(np.isfinite(arr)):
            raise DomainError("reward values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class PolicyTable:
    """Dense stochastic policy; rows are distributions over actions."""

    probs: np.ndarray
    deterministic: bool = False

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 2:
            raise DomainError("policy probs must be a 2-d table")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DomainError("policy probs must be finite and nonnegative")
        if np.any(np.abs(arr.sum(axis=1) - 1.0) > ROW_SUM_ATOL):
            raise DomainError("each policy row must sum to 1")
        if self.deterministic and np.any((arr == 1.0).sum(axis=1) != 1):
            raise DomainError("deterministic policy rows must be one-hot")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def from_actions(cls, actions, num_actions: int) -> "PolicyTable":
        """Deterministic policy from a vector of action indices."""
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, num_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs, deterministic=True)

    def actions(self) -> np.ndarray:
        """Row-wise argmax (lowest index on ties)."""
        return np.argmax(self.probs, axis=1)


@dataclass(frozen=True)
class ValueFunctions:
    v: np.ndarray
    q: np.ndarray
    advantage: np.ndarray


@dataclass(frozen=True)
class SoftValueFunctions:
    v: np.ndarray
    q: np.ndarray
    advantage: np.ndarray
    lam: float


@dataclass(frozen=True)
class OccupancyMeasure:
    """Discounted state-action visitation distribution; sums to 1."""

    d: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.d, dtype=float)
        if arr.ndim != 2 or np.any(arr < 0):
            raise DomainError("occupancy must be a nonnegative 2-d table")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise DomainError("occupancy must sum to 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "d", arr)

    def state_marginal(self) -> np.ndarray:
        return self.d.sum(axis=1)


def _check_shape(mdp: TabularMdp, table: np.ndarray, name: str) -> None:
    if table.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError(
            f"{name} has shape {table.shape}, expected "
            f"{(mdp.num_states, mdp.num_actions)}"
        )


def expected_next_values(mdp: TabularMdp, v: np.ndarray) -> np.ndarray:
    """E[v(s') | s, a] as an S x A table."""
    return mdp.transitions @ v


def value_iteration(mdp: TabularMdp, r: RewardTable, tol: float = 1e-10) -> ValueFunctions:
    """Bellman optimality fixed point.

    Sweeps until the sup-norm delta drops below tol * (1 - gamma) / (2 gamma),
    which bounds the distance to the exact optimum by tol / (1 - gamma).
    The returned tables satisfy q = r + gamma * P v and v = max_a q exactly,
    so the advantage has a zero row-wise maximum.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    _check_shape(mdp, r.values, "reward")
    gamma = mdp.discount
    v = np.zeros(mdp.num_states)
    if gamma > 0:
        stop = tol * (1.0 - gamma) / (2.0 * gamma)
        while True:
            q = r.values + gamma * expected_next_values(mdp, v)
            v_new = q.max(axis=1)
            delta = np.abs(v_new - v).max()
            v = v_new
            if delta <= stop:
                break
    q = r.values + gamma * expected_next_values(mdp, v)
    v = q.max(axis=1)
    return ValueFunctions(v=v, q=q, advantage=q - v[:, None])


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1)
    return m + np.log(np.exp(x - m[:, None]).sum(axis=1))


def soft_value_iteration(
    mdp: TabularMdp, r: RewardTable, lam: float, tol: float = 1e-10
) -> SoftValueFunctions:
    """Entropy-regularized optimality fixed point, v = lam * logsumexp(q / lam)."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    if tol <= 0:
        raise DomainError("tol must be positive")
    _check_shape(mdp, r.values, "reward")
    gamma = mdp.discount
    v = np.zeros(mdp.num_states)
    if gamma > 0:
        stop = tol * (1.0 - gamma) / (2.0 * gamma)
        while True:
            q = r.values + gamma * expected_next_values(mdp, v)
            v_new = lam * _logsumexp_rows(q / lam)
            delta = np.abs(v_new - v).max()
            v = v_new
            if delta <= stop:
                break
    q = r.values + gamma * expected_next_values(mdp, v)
    v = lam * _logsumexp_rows(q / lam)
    return SoftValueFunctions(v=v, q=q, advantage=q - v[:, None], lam=lam)


def transition_matrix(mdp: TabularMdp, policy: PolicyTable) -> np.ndarray:
    """State-to-state chain P_pi(s, s') = sum_a pi(a|s) p(s'|s, a)."""
    _check_shape(mdp, policy.probs, "policy")
    return np.einsum("sa,sap->sp", policy.probs, mdp.transitions)


def w_matrix(mdp: TabularMdp, policy: PolicyTable) -> np.ndarray:
    """I - gamma * P_pi; always invertible for gamma < 1."""
    return np.eye(mdp.num_states) - mdp.discount * transition_matrix(mdp, policy)


def policy_evaluation(mdp: TabularMdp, policy: PolicyTable, r: RewardTable) -> ValueFunctions:
    """Exact v^pi via the dense linear solve W_pi v = r^pi."""
    _check_shape(mdp, r.values, "reward")
    r_pi = (policy.probs * r.values).sum(axis=1)
    v = np.linalg.solve(w_matrix(mdp, policy), r_pi)
    q = r.values + mdp.discount * expected_next_values(mdp, v)
    return ValueFunctions(v=v, q=q, advantage=q - v[:, None])


def occupancy_measure(mdp: TabularMdp, policy: PolicyTable) -> OccupancyMeasure:
    """Solve the flow equations for the discounted state-action visitation."""
    e0 = np.zeros(mdp.num_states)
    e0[mdp.initial_state] = 1.0 - mdp.discount
    d_state = np.linalg.solve(w_matrix(mdp, policy).T, e0)
    d = np.maximum(d_state[:, None] * policy.probs, 0.0)
    return OccupancyMeasure(d=d)


def reachable_support(mdp: TabularMdp, policy: PolicyTable) -> frozenset[int]:
    """States reachable from the initial state with positive probability.

    Uses exact zero tests on policy and transition entries, matching the
    support semantics of the visitation distribution.
    """
    _check_shape(mdp, policy.probs, "policy")
    seen = {mdp.initial_state}
    frontier = [mdp.initial_state]
    while frontier:
        s = frontier.pop()
        edge = (policy.probs[s][:, None] * mdp.transitions[s]) > 0.0
        for s_next in np.flatnonzero(edge.any(axis=0)):
            if int(s_next) not in seen:
                seen.add(int(s_next))
                frontier.append(int(s_next))
    return frozenset(seen)


def k_pi(mdp: TabularMdp, policy: PolicyTable) -> float:
    """|det(W_pi)|^(-1/S), the bounded-set normalizer for the policy."""
    sign, logabsdet = np.linalg.slogdet(w_matrix(mdp, policy))
    if sign == 0:
        raise DomainError("W matrix is singular; discount must be < 1")
    return float(np.exp(-logabsdet / mdp.num_states))


def boltzmann_policy(q: np.ndarray, temperature: float) -> PolicyTable:
    """Row-wise softmax of q / temperature, overflow-safe."""
    if temperature <= 0:
        raise DomainError("temperature must be positive")
    scaled = np.asarray(q, dtype=float) / temperature
    scaled = scaled - scaled.max(axis=1, keepdims=True)
    expq = np.exp(scaled)
    return PolicyTable(expq / expq.sum(axis=1, keepdims=True))


def soft_optimal_policy(soft: SoftValueFunctions) -> PolicyTable:
    """The policy proportional to exp(q / lam) for soft-optimal q."""
    return boltzmann_policy(soft.q, soft.lam)


def greedy_policy(vf: ValueFunctions) -> PolicyTable:
    """Deterministic argmax policy; lowest action index wins ties."""
    actions = np.argmax(vf.q, axis=1)
    return PolicyTable.from_actions(actions, vf.q.shape[1])


def random_mdp(
    num_states: int,
    num_actions: int,
    discount: float,
    rng: np.random.Generator,
    initial_state: int = 0,
) -> TabularMdp:
    """Dense random instance with Dirichlet transition rows."""
    transitions = rng.dirichlet(
        np.ones(num_states), size=(num_states, num_actions)
    )
    return TabularMdp(
        num_states=num_states,
        num_actions=num_actions,
        initial_state=initial_state,
        transitions=transitions,
        discount=discount,
    )


def random_policy(
    num_states: int, num_actions: int, rng: np.random.Generator
) -> PolicyTable:
    """Random stochastic policy with Dirichlet rows."""
    return PolicyTable(rng.dirichlet(np.ones(num_actions), size=num_states))
