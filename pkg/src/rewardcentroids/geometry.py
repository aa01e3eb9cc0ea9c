"""Feasible-set membership, explicit parameterizations, and bounded reward sets.

A behavior model ties an observed policy to the rewards consistent with it:
OPT (policy optimal), MCE (soft-optimal with coefficient lam), or BIRL
(softmax of the hard optimal Q with temperature beta).  The feasible sets are
unbounded; the bounded sets here cap the induced (soft-)optimal value and
advantage functions by constants c1 and c2 instead of boxing the reward
entries directly, which removes the policy bias of a plain hypercube prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mdp import (
    PolicyTable,
    RewardTable,
    TabularMdp,
    ValueFunctions,
    boltzmann_policy,
    expected_next_values,
    greedy_policy,
    k_pi,
    soft_optimal_policy,
    soft_value_iteration,
    value_iteration,
    w_matrix,
)

OPT = "opt"
MCE = "mce"
BIRL = "birl"


@dataclass(frozen=True)
class BehaviorModel:
    kind: str
    lam: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in (OPT, MCE, BIRL):
            raise DomainError(f"unknown behavior model kind {self.kind!r}")
        if self.kind == OPT and (self.lam is not None or self.beta is not None):
            raise DomainError("OPT carries no coefficient")
        if self.kind == MCE and (self.lam is None or self.lam <= 0 or self.beta is not None):
            raise DomainError("MCE requires lam > 0")
        if self.kind == BIRL and (self.beta is None or self.beta <= 0 or self.lam is not None):
            raise DomainError("BIRL requires beta > 0")

    @classmethod
    def opt(cls) -> "BehaviorModel":
        return cls(OPT)

    @classmethod
    def mce(cls, lam: float) -> "BehaviorModel":
        return cls(MCE, lam=lam)

    @classmethod
    def birl(cls, beta: float) -> "BehaviorModel":
        return cls(BIRL, beta=beta)

    @property
    def coefficient(self) -> float:
        """lam for MCE, beta for BIRL."""
        if self.kind == MCE:
            return float(self.lam)
        if self.kind == BIRL:
            return float(self.beta)
        raise DomainError("OPT has no coefficient")


@dataclass(frozen=True)
class BoundedSetParams:
    """Constants c1 (value bound) and c2 (advantage bound) for a model.

    When pi_min is supplied, the advantage bound is validated against the
    model-specific threshold below which the bounded set cannot contain the
    whole feasible set of a pi_min-bounded policy (the BIRL threshold also
    needs num_actions).
    """

    c1: float
    c2: float
    model: BehaviorModel
    pi_min: float | None = None
    num_actions: int | None = None

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise DomainError("c1 and c2 must be positive")
        if self.pi_min is not None:
            if not (0 < self.pi_min <= 1):
                raise DomainError("pi_min must lie in (0, 1]")
            if self.model.kind == MCE:
                needed = self.model.coefficient * np.log(1.0 / self.pi_min)
                if self.c2 < needed - 1e-12:
                    raise DomainError(
                        f"MCE requires c2 >= lam * log(1/pi_min) = {needed:.6g}"
                    )
            elif self.model.kind == BIRL and self.num_actions is not None:
                needed = self.model.coefficient * np.log(
                    1.0 / (self.num_actions * self.pi_min)
                )
                if self.c2 < needed - 1e-12:
                    raise DomainError(
                        f"BIRL requires c2 >= beta * log(1/(A*pi_min)) = {needed:.6g}"
                    )


def default_bounded_params(model: BehaviorModel, gamma: float, num_actions: int) -> BoundedSetParams:
    """Smallest constants for which the bounded set contains the unit hypercube."""
    if model.kind == MCE:
        c = (2.0 + model.coefficient * np.log(num_actions)) / (1.0 - gamma)
    else:
        c = (1.0 + gamma) / (1.0 - gamma)
    return BoundedSetParams(c1=c, c2=c, model=model)


@dataclass(frozen=True)
class AdvantageGap:
    """Nonpositive gap table; the zero entries mark the prescribed actions."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or not np.all(np.isfinite(arr)):
            raise DomainError("gap values must be a finite 2-d table")
        if np.any(arr > 0):
            raise DomainError("gap values must be nonpositive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _require_deterministic(policy: PolicyTable, what: str) -> np.ndarray:
    if not policy.deterministic:
        raise DomainError(f"{what} requires a deterministic policy")
    return policy.actions()


def t_operator(
    mdp: TabularMdp, det_policy: PolicyTable, v: np.ndarray, gaps: AdvantageGap
) -> RewardTable:
    """Reward with prescribed optimal values v and advantage gaps.

    r(s, a) = v(s) - gamma * E[v(s')|s, a] + gap(s, a), with a zero gap at the
    policy's action.  Running value iteration on the result recovers (v, gaps)
    and makes the policy optimal in every state.
    """
    actions = _require_deterministic(det_policy, "t_operator")
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.num_states,):
        raise DomainError("v must be a length-S vector")
    if gaps.values.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError("gaps must be an S x A table")
    if np.any(gaps.values[np.arange(mdp.num_states), actions] != 0.0):
        raise DomainError("gap at the policy's action must be exactly 0")
    shaped = v[:, None] - mdp.discount * expected_next_values(mdp, v)
    return RewardTable(shaped + gaps.values)


def u_operator(mdp: TabularMdp, eta: RewardTable, v: np.ndarray) -> RewardTable:
    """r(s, a) = v(s) - gamma * E[v(s')|s, a] + eta(s, a)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.num_states,):
        raise DomainError("v must be a length-S vector")
    if eta.values.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError("eta must be an S x A table")
    shaped = v[:, None] - mdp.discount * expected_next_values(mdp, v)
    return RewardTable(shaped + eta.values)


def _require_positive_rows(policy: PolicyTable) -> np.ndarray:
    if np.any(policy.probs <= 0.0):
        raise DomainError("policy must be strictly positive everywhere")
    return policy.probs


def eta_mce(policy: PolicyTable, lam: float) -> RewardTable:
    """The soft-advantage term lam * log pi(a|s)."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    probs = _require_positive_rows(policy)
    return RewardTable(lam * np.log(probs))


def eta_birl(policy: PolicyTable, beta: float) -> RewardTable:
    """The hard-advantage term beta * log(pi(a|s) / max_a' pi(a'|s))."""
    if beta <= 0:
        raise DomainError("beta must be positive")
    probs = _require_positive_rows(policy)
    return RewardTable(beta * (np.log(probs) - np.log(probs.max(axis=1, keepdims=True))))


def is_feasible(
    mdp: TabularMdp,
    expert: PolicyTable,
    support: frozenset[int] | set[int],
    r: RewardTable,
    model: BehaviorModel,
    tol: float = 1e-8,
) -> bool:
    """Does the reward make the expert's behavior consistent with the model?

    OPT: the expert's action attains the optimal Q at every support state.
    MCE: the soft-optimal policy matches the expert (entrywise, within tol).
    BIRL: the Boltzmann policy of the optimal Q matches the expert.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    sup = sorted(int(s) for s in support)
    for s in sup:
        if not (0 <= s < mdp.num_states):
            raise DomainError("support state out of range")
    if not sup:
        return True
    if model.kind == OPT:
        probs = expert.probs[sup]
        if np.any((probs == 1.0).sum(axis=1) != 1):
            raise DomainError("OPT requires an expert deterministic on the support")
        vf = value_iteration(mdp, r)
        actions = expert.actions()
        for s in sup:
            if vf.q[s, actions[s]] < vf.q[s].max() - tol:
                return False
        return True
    if np.any(expert.probs[sup] <= 0.0):
        raise DomainError("MCE/BIRL require an expert strictly positive on the support")
    if model.kind == MCE:
        soft = soft_value_iteration(mdp, r, model.coefficient)
        candidate = soft_optimal_policy(soft)
    else:
        vf = value_iteration(mdp, r)
        candidate = boltzmann_policy(vf.q, model.coefficient)
    gap = np.abs(candidate.probs[sup] - expert.probs[sup])
    return bool(gap.max() <= tol)


def is_in_bounded_set(
    mdp: TabularMdp, r: RewardTable, params: BoundedSetParams, tol: float = 1e-8
) -> bool:
    """Membership in the bounded reward set for the parameterized model.

    OPT evaluates the bounds for the lowest-index greedy optimal policy
    (value bound scaled by k_pi); MCE and BIRL bound the soft/hard optimal
    value and advantage directly.
    """
    model = params.model
    if model.kind == MCE:
        soft = soft_value_iteration(mdp, r, model.coefficient)
        v, adv = soft.v, soft.advantage
        c1_bound = params.c1
    elif model.kind == BIRL:
        vf = value_iteration(mdp, r)
        v, adv = vf.v, vf.advantage
        c1_bound = params.c1
    else:
        vf = value_iteration(mdp, r)
        v, adv = vf.v, vf.advantage
        c1_bound = params.c1 * k_pi(mdp, greedy_policy(vf))
    return bool(
        np.abs(v).max() <= c1_bound + tol and np.abs(adv).max() <= params.c2 + tol
    )


def bounding_box(params: BoundedSetParams, gamma: float) -> tuple[float, float]:
    """Outer box of the bounded set: [-(1+g)/(1-g) c1 - c2, +(1+g)/(1-g) c1]."""
    if not (0.0 <= gamma < 1.0):
        raise DomainError("gamma must lie in [0, 1)")
    scale = (1.0 + gamma) / (1.0 - gamma)
    return (-scale * params.c1 - params.c2, scale * params.c1)


def t_matrix(mdp: TabularMdp, det_policy: PolicyTable) -> np.ndarray:
    """The (V, A) -> r operator materialized as an SA x SA matrix.

    Rows enumerate (s, a) pairs; the first S columns carry the shaping
    coefficients on V, the remaining S(A-1) columns place the gap of each
    non-prescribed action.
    """
    actions = _require_deterministic(det_policy, "t_matrix")
    S, A = mdp.num_states, mdp.num_actions
    mat = np.zeros((S * A, S * A))
    gap_col = S
    for s in range(S):
        for a in range(A):
            row = s * A + a
            mat[row, :S] = -mdp.discount * mdp.transitions[s, a]
            mat[row, s] += 1.0
            if a != actions[s]:
                mat[row, gap_col] = 1.0
                gap_col += 1
    return mat


def t_matrix_determinant_check(
    mdp: TabularMdp, det_policy: PolicyTable
) -> tuple[float, float]:
    """(|det T|, |det W|) for the policy; the two magnitudes coincide."""
    det_t = abs(float(np.linalg.det(t_matrix(mdp, det_policy))))
    det_w = abs(float(np.linalg.det(w_matrix(mdp, det_policy))))
    return det_t, det_w


def optimality_certificate(vf: ValueFunctions, tol: float) -> bool:
    """True when no action improves on the value function by more than tol."""
    return bool((vf.q - vf.v[:, None]).max() <= tol)
