"""Monte-Carlo and analytic instruments for the reward-set geometry claims.

The estimators here are the package's independent oracles: hypercube volume
fractions of feasible sets, exact 1-d segment lengths, rejection-sampled
centroids of the bounded sets, manifold-parameterized centroids, and the
cross-environment bias ratio.  Membership tests are vectorized over sample
batches by evaluating fixed policies with dense linear algebra (policy
improvement is linear in the reward), never by per-sample value iteration.

Sampling is chunked; chunk i draws from an independent counter-derived
substream of the seed, so estimates depend only on (seed, n) no matter how
chunks are scheduled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import OPT, BehaviorModel, BoundedSetParams, bounding_box
from .mdp import PolicyTable, RewardTable, TabularMdp

CHUNK = 1 << 17
MAX_ENUMERATED_POLICIES = 4096


@dataclass(frozen=True)
class McEstimate:
    """A Monte-Carlo mean with its standard error and acceptance bookkeeping."""

    mean: float | np.ndarray
    std_error: float | np.ndarray
    n_samples: int
    n_accepted: int


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _chunk_sizes(n: int) -> list[int]:
    sizes = [CHUNK] * (n // CHUNK)
    if n % CHUNK:
        sizes.append(n % CHUNK)
    return sizes


class _PolicyEvaluator:
    """Batched exact evaluation of one deterministic policy.

    Policy improvement on the resulting value function decides optimality;
    everything is linear in the reward, so a whole batch is one matmul.
    """

    def __init__(self, mdp: TabularMdp, actions: np.ndarray):
        self.mdp = mdp
        self.actions = np.asarray(actions, dtype=int)
        S = mdp.num_states
        p_pi = mdp.transitions[np.arange(S), self.actions]
        w = np.eye(S) - mdp.discount * p_pi
        self.inv_w_t = np.linalg.inv(w).T
        sign, logdet = np.linalg.slogdet(w)
        self.k_pi = float(np.exp(-logdet / S))

    def values(self, rewards: np.ndarray) -> np.ndarray:
        r_pi = rewards[:, np.arange(self.mdp.num_states), self.actions]
        return r_pi @ self.inv_w_t

    def q_tables(self, rewards: np.ndarray, v: np.ndarray) -> np.ndarray:
        return rewards + self.mdp.discount * np.einsum(
            "sap,np->nsa", self.mdp.transitions, v
        )

    def optimal_mask(self, rewards: np.ndarray, tol: float = 0.0) -> np.ndarray:
        # q at the prescribed action equals v identically (Bellman row), so
        # it is zeroed out rather than left to floating-point noise.
        v = self.values(rewards)
        gap = self.q_tables(rewards, v) - v[:, :, None]
        gap[:, np.arange(self.mdp.num_states), self.actions] = 0.0
        return (gap <= tol).all(axis=(1, 2))


def _evaluators_for_all_policies(mdp: TabularMdp) -> list[_PolicyEvaluator]:
    count = mdp.num_actions**mdp.num_states
    if count > MAX_ENUMERATED_POLICIES:
        raise DomainError("instance too large for exhaustive policy enumeration")
    return [
        _PolicyEvaluator(mdp, np.array(actions))
        for actions in itertools.product(range(mdp.num_actions), repeat=mdp.num_states)
    ]


def _bounded_opt_mask(
    evaluators: list[_PolicyEvaluator],
    rewards: np.ndarray,
    c1: float,
    c2: float,
    tol: float = 1e-9,
) -> np.ndarray:
    """Membership in the bounded OPT set, enumerating every deterministic policy."""
    n = rewards.shape[0]
    violated = np.zeros(n, dtype=bool)
    any_optimal = np.zeros(n, dtype=bool)
    for ev in evaluators:
        optimal = ev.optimal_mask(rewards, tol)
        v = ev.values(rewards)
        q = ev.q_tables(rewards, v)
        bounded = (np.abs(v) <= c1 * ev.k_pi + tol).all(axis=1)
        bounded &= (np.abs(q - v[:, :, None]) <= c2 + tol).all(axis=(1, 2))
        violated |= optimal & ~bounded
        any_optimal |= optimal
    return any_optimal & ~violated


def _extension_evaluators(
    mdp: TabularMdp, expert: PolicyTable, support: frozenset[int] | set[int]
) -> list[_PolicyEvaluator]:
    """Evaluators for every deterministic completion of the expert off its support."""
    rows = sorted(int(s) for s in support)
    if rows and np.any((expert.probs[rows] == 1.0).sum(axis=1) != 1):
        raise DomainError("expert must be deterministic on the support")
    base = expert.actions()
    off = sorted(set(range(mdp.num_states)) - set(rows))
    if mdp.num_actions ** len(off) > MAX_ENUMERATED_POLICIES:
        raise DomainError("too many expert extensions to enumerate")
    evaluators = []
    for combo in itertools.product(range(mdp.num_actions), repeat=len(off)):
        actions = base.copy()
        for s, a in zip(off, combo):
            actions[s] = a
        evaluators.append(_PolicyEvaluator(mdp, actions))
    return evaluators


def mc_volume_fraction(
    mdp: TabularMdp,
    policy: PolicyTable,
    model: BehaviorModel,
    box: tuple[float, float],
    n: int,
    seed: int,
    params: BoundedSetParams | None = None,
    tol: float = 0.0,
) -> McEstimate:
    """Fraction of a uniform sample of the box that makes the policy optimal.

    Only the OPT model carries full-dimensional feasible sets, so only OPT is
    accepted here.  With params supplied, membership in the bounded set is
    required as well.
    """
    if model.kind != OPT:
        raise DomainError("volume fractions are defined for the OPT model only")
    if n < 1:
        raise DomainError("n must be >= 1")
    lo, hi = box
    if not lo < hi:
        raise DomainError("box must be a nonempty interval")
    if not policy.deterministic:
        raise DomainError("volume fractions require a deterministic policy")
    target = _PolicyEvaluator(mdp, policy.actions())
    evaluators = _evaluators_for_all_policies(mdp) if params is not None else None
    S, A = mdp.num_states, mdp.num_actions
    accepted = 0
    for i, size in enumerate(_chunk_sizes(n)):
        rng = _chunk_rng(seed, i)
        rewards = rng.uniform(lo, hi, size=(size, S, A))
        mask = target.optimal_mask(rewards, tol)
        if params is not None:
            mask &= _bounded_opt_mask(evaluators, rewards, params.c1, params.c2)
        accepted += int(mask.sum())
    mean = accepted / n
    return McEstimate(
        mean=mean,
        std_error=float(np.sqrt(mean * (1.0 - mean) / n)),
        n_samples=n,
        n_accepted=accepted,
    )


def segment_volume_1d(
    mdp: TabularMdp,
    policy: PolicyTable,
    model: BehaviorModel,
    box_halfwidth: float,
) -> float:
    """Exact length of the 1-d MCE/BIRL feasible line inside a centered box.

    On the single-state two-action instance the feasible set is the line
    r(a1) = r(a2) + coef * log(pi(a1)/pi(a2)); the returned value is the
    length of its intersection with the box, measured along the r(a2) axis.
    """
    if mdp.num_states != 1 or mdp.num_actions != 2:
        raise DomainError("segment volume requires exactly 1 state and 2 actions")
    if model.kind == OPT:
        raise DomainError("segment volume applies to MCE/BIRL only")
    if box_halfwidth <= 0:
        raise DomainError("box_halfwidth must be positive")
    p = policy.probs[0]
    if np.any(p <= 0.0):
        raise DomainError("policy must be strictly positive")
    shift = model.coefficient * float(np.log(p[0]) - np.log(p[1]))
    b = box_halfwidth
    length = min(b, b - shift) - max(-b, -b - shift)
    return max(0.0, float(length))


def _accumulating_centroid(
    mdp: TabularMdp,
    accept_fn,
    box: tuple[float, float],
    n: int,
    seed: int,
) -> McEstimate:
    S, A = mdp.num_states, mdp.num_actions
    lo, hi = box
    total = np.zeros((S, A))
    total_sq = np.zeros((S, A))
    accepted = 0
    for i, size in enumerate(_chunk_sizes(n)):
        rng = _chunk_rng(seed, i)
        rewards = rng.uniform(lo, hi, size=(size, S, A))
        mask = accept_fn(rewards)
        accepted += int(mask.sum())
        picked = rewards[mask]
        total += picked.sum(axis=0)
        total_sq += (picked**2).sum(axis=0)
    if accepted == 0:
        nan = np.full((S, A), np.nan)
        return McEstimate(mean=nan, std_error=nan.copy(), n_samples=n, n_accepted=0)
    mean = total / accepted
    var = np.maximum(total_sq / accepted - mean**2, 0.0)
    if accepted > 1:
        var *= accepted / (accepted - 1)
    return McEstimate(
        mean=mean,
        std_error=np.sqrt(var / accepted),
        n_samples=n,
        n_accepted=accepted,
    )


def mc_centroid_opt(
    mdp: TabularMdp,
    expert: PolicyTable,
    support: frozenset[int] | set[int],
    params: BoundedSetParams,
    n: int,
    seed: int,
) -> McEstimate:
    """Rejection-sampled mean of the bounded OPT set cut to the expert's feasible set.

    Samples uniformly in the outer bounding box; a draw is accepted when it
    lies in the bounded set and some deterministic completion of the expert
    is optimal everywhere.  Zero acceptance is reported, not raised.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    box = bounding_box(params, mdp.discount)
    extensions = _extension_evaluators(mdp, expert, support)
    all_policies = _evaluators_for_all_policies(mdp)

    def accept(rewards: np.ndarray) -> np.ndarray:
        mask = np.zeros(rewards.shape[0], dtype=bool)
        for ev in extensions:
            mask |= ev.optimal_mask(rewards)
        mask &= _bounded_opt_mask(all_policies, rewards, params.c1, params.c2)
        return mask

    return _accumulating_centroid(mdp, accept, box, n, seed)


def mc_centroid_prior(
    mdp: TabularMdp, params: BoundedSetParams, n: int, seed: int
) -> McEstimate:
    """Mean of the bounded OPT set alone (no feasibility predicate)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    box = bounding_box(params, mdp.discount)
    all_policies = _evaluators_for_all_policies(mdp)

    def accept(rewards: np.ndarray) -> np.ndarray:
        return _bounded_opt_mask(all_policies, rewards, params.c1, params.c2)

    return _accumulating_centroid(mdp, accept, box, n, seed)


def mc_centroid_manifold(
    mdp: TabularMdp, eta: RewardTable, c1: float, n: int, seed: int
) -> McEstimate:
    """Average of the shaping operator over uniform values; converges to eta.

    Parameterizes the (MCE/BIRL) feasible manifold by the value vector and
    averages r = V(s) - gamma E[V(s')|s,a] + eta(s,a) with V uniform in
    [-c1, +c1]^S; linearity makes eta the exact mean.
    """
    if c1 <= 0:
        raise DomainError("c1 must be positive")
    if n < 1:
        raise DomainError("n must be >= 1")
    if eta.values.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError("eta shape does not match the MDP")
    S, A = mdp.num_states, mdp.num_actions
    total = np.zeros((S, A))
    total_sq = np.zeros((S, A))
    for i, size in enumerate(_chunk_sizes(n)):
        rng = _chunk_rng(seed, i)
        v = rng.uniform(-c1, c1, size=(size, S))
        shaped = v[:, :, None] - mdp.discount * np.einsum(
            "sap,np->nsa", mdp.transitions, v
        )
        rewards = shaped + eta.values
        total += rewards.sum(axis=0)
        total_sq += (rewards**2).sum(axis=0)
    mean = total / n
    var = np.maximum(total_sq / n - mean**2, 0.0)
    if n > 1:
        var *= n / (n - 1)
    return McEstimate(
        mean=mean, std_error=np.sqrt(var / n), n_samples=n, n_accepted=n
    )


def fig_two_state_chain(gamma: float) -> TabularMdp:
    """Two-state chain: action 0 loops in state 0, action 1 jumps to the
    absorbing state 1 where both actions loop."""
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = 1.0
    p[0, 1, 1] = 1.0
    p[1, :, 1] = 1.0
    return TabularMdp(
        num_states=2, num_actions=2, initial_state=0, transitions=p, discount=gamma
    )


def _bias_ratio_instances(gamma: float) -> tuple[TabularMdp, TabularMdp]:
    # Source: every action loops in place.  Target: action 1 in state 0 jumps.
    p_src = np.zeros((2, 2, 2))
    p_src[0, :, 0] = 1.0
    p_src[1, :, 1] = 1.0
    src = TabularMdp(2, 2, 0, p_src, gamma)
    return src, fig_two_state_chain(gamma)


def new_env_bias_ratio_closed_form(c2: float) -> float:
    """Limit value of the cross-environment ratio as the discounts approach 1."""
    if c2 <= 0:
        raise DomainError("c2 must be positive")
    if c2 >= 2.0:
        return 1.0 / (3.0 * c2)
    return c2 * c2 / 24.0 - c2 / 4.0 + 0.5


def new_env_bias_ratio(c2: float, n: int, seed: int, gamma: float = 0.999) -> McEstimate:
    """Cross-environment volume ratio of the bounded prior, estimated by MC.

    Draws uniformly from the bounded feasible slab of the policy (jump, stay)
    in the all-self-loop source environment via its (V, gap) parameterization
    (c1 fixed at 1), then measures how often the policy (stay, stay) is
    optimal in the target environment where action 1 jumps.  The limit value
    is new_env_bias_ratio_closed_form(c2); a ratio different from 1/2 is the
    bias being demonstrated.
    """
    if c2 <= 0:
        raise DomainError("c2 must be positive")
    if n < 1:
        raise DomainError("n must be >= 1")
    src, dst = _bias_ratio_instances(gamma)
    sample_policy = np.array([1, 0])  # jump-flavored action in s0, loop in s1
    target = _PolicyEvaluator(dst, np.array([0, 0]))
    src_eval = _PolicyEvaluator(src, sample_policy)
    v_halfwidth = 1.0 * src_eval.k_pi  # c1 = 1
    hits = 0
    for i, size in enumerate(_chunk_sizes(n)):
        rng = _chunk_rng(seed, i)
        v = rng.uniform(-v_halfwidth, v_halfwidth, size=(size, 2))
        gaps = rng.uniform(-c2, 0.0, size=(size, 2))
        shaped = v[:, :, None] - gamma * np.einsum("sap,np->nsa", src.transitions, v)
        rewards = shaped.copy()
        rewards[:, 0, 0] += gaps[:, 0]  # non-prescribed action in s0
        rewards[:, 1, 1] += gaps[:, 1]  # non-prescribed action in s1
        hits += int(target.optimal_mask(rewards).sum())
    ratio = hits / n
    return McEstimate(
        mean=ratio,
        std_error=float(np.sqrt(ratio * (1.0 - ratio) / n)),
        n_samples=n,
        n_accepted=hits,
    )
