"""Planning in new environments: greedy, budget-constrained, and imitation baselines.

Constrained planning maximizes expected reward over occupancy measures with
the flow equations as constraints, so the budget "discounted cost value at
the initial state <= k" becomes the linear constraint sum(d * c) <= (1-gamma)k.
The MIMIC baseline instead finds the occupancy in the target environment
closest in L1 distance to the expert's occupancy in the source environment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleConstraintError
from .geometry import AdvantageGap, t_operator
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, LpSolution, solve
from .mdp import (
    OccupancyMeasure,
    PolicyTable,
    RewardTable,
    TabularMdp,
    greedy_policy,
    occupancy_measure,
    value_iteration,
)

VALUE_BUDGET = "value"        # V^pi(s0; c) <= k, the default
OCCUPANCY_BUDGET = "occupancy"  # sum d*c <= k as written in the matching LP


@dataclass(frozen=True)
class ConstraintSpec:
    """Cost table c and budget k; a policy is feasible when V^pi(s0; c) <= k."""

    cost: RewardTable
    budget: float

    def __post_init__(self):
        if self.budget < 0:
            raise DomainError("budget must be nonnegative")


@dataclass(frozen=True)
class PlanResult:
    policy: PolicyTable
    occupancy: OccupancyMeasure
    value: float


@dataclass(frozen=True)
class MimicResult:
    policy: PolicyTable
    occupancy: OccupancyMeasure
    l1_distance: float


def plan_unconstrained(mdp: TabularMdp, r: RewardTable) -> PolicyTable:
    """Greedy policy of the optimal Q; lowest action index on ties."""
    return greedy_policy(value_iteration(mdp, r))


def _flow_rows(mdp: TabularMdp) -> tuple[np.ndarray, np.ndarray]:
    S, A = mdp.num_states, mdp.num_actions
    lhs = np.zeros((S, S * A))
    for s in range(S):
        lhs[s, s * A : (s + 1) * A] += 1.0
    # minus gamma * p(s | s', a') on column (s', a')
    inflow = mdp.discount * np.transpose(mdp.transitions, (2, 0, 1)).reshape(S, S * A)
    lhs -= inflow
    rhs = np.zeros(S)
    rhs[mdp.initial_state] = 1.0 - mdp.discount
    return lhs, rhs


def _occupancy_lp(
    mdp: TabularMdp,
    objective: np.ndarray,
    constraint: ConstraintSpec | None,
    budget_convention: str,
    extra_vars: int = 0,
    extra_eq: tuple[np.ndarray, np.ndarray] | None = None,
    extra_ub: tuple[np.ndarray, np.ndarray] | None = None,
) -> LinearProgram:
    S, A = mdp.num_states, mdp.num_actions
    n = S * A + extra_vars
    flow_lhs, flow_rhs = _flow_rows(mdp)
    eq_lhs = np.zeros((S + 1, n))
    eq_lhs[:S, : S * A] = flow_lhs
    eq_lhs[S, : S * A] = 1.0
    eq_rhs = np.concatenate([flow_rhs, [1.0]])
    ub_lhs = np.zeros((0, n))
    ub_rhs = np.zeros(0)
    if constraint is not None:
        if constraint.cost.shape != (S, A):
            raise DomainError("constraint cost shape does not match the MDP")
        if budget_convention == VALUE_BUDGET:
            cap = (1.0 - mdp.discount) * constraint.budget
        elif budget_convention == OCCUPANCY_BUDGET:
            cap = constraint.budget
        else:
            raise DomainError(f"unknown budget convention {budget_convention!r}")
        row = np.zeros((1, n))
        row[0, : S * A] = constraint.cost.values.ravel()
        ub_lhs = np.vstack([ub_lhs, row])
        ub_rhs = np.concatenate([ub_rhs, [cap]])
    if extra_eq is not None:
        eq_lhs = np.vstack([eq_lhs, extra_eq[0]])
        eq_rhs = np.concatenate([eq_rhs, extra_eq[1]])
    if extra_ub is not None:
        ub_lhs = np.vstack([ub_lhs, extra_ub[0]])
        ub_rhs = np.concatenate([ub_rhs, extra_ub[1]])
    return LinearProgram(
        objective=objective, eq_lhs=eq_lhs, eq_rhs=eq_rhs, ub_lhs=ub_lhs, ub_rhs=ub_rhs
    )


def policy_from_occupancy(d: OccupancyMeasure) -> PolicyTable:
    """Conditional action distribution of an occupancy; zero-mass rows go uniform."""
    mass = d.d.sum(axis=1)
    A = d.d.shape[1]
    probs = np.full_like(d.d, 1.0 / A)
    covered = mass > 1e-12
    probs[covered] = d.d[covered] / mass[covered, None]
    probs /= probs.sum(axis=1, keepdims=True)
    return PolicyTable(probs)


def _solution_occupancy(mdp: TabularMdp, sol: LpSolution) -> tuple[PolicyTable, OccupancyMeasure]:
    S, A = mdp.num_states, mdp.num_actions
    d_raw = np.maximum(sol.x[: S * A].reshape(S, A), 0.0)
    d_raw /= d_raw.sum()
    policy = policy_from_occupancy(OccupancyMeasure(d_raw))
    # Re-solving the flow for the extracted policy removes simplex roundoff.
    return policy, occupancy_measure(mdp, policy)


def plan_constrained(
    mdp: TabularMdp,
    r: RewardTable,
    constraint: ConstraintSpec,
    budget_convention: str = VALUE_BUDGET,
) -> PlanResult:
    """Maximize V(s0; r) over policies whose cost value stays within budget."""
    if r.shape != (mdp.num_states, mdp.num_actions):
        raise DomainError("reward shape does not match the MDP")
    lp = _occupancy_lp(mdp, -r.values.ravel(), constraint, budget_convention)
    sol = solve(lp)
    if sol.status == INFEASIBLE:
        raise InfeasibleConstraintError("no policy satisfies the cost budget")
    if sol.status != OPTIMAL:
        raise RuntimeError(f"unexpected LP status {sol.status}")
    policy, occ = _solution_occupancy(mdp, sol)
    value = float((occ.d * r.values).sum() / (1.0 - mdp.discount))
    return PlanResult(policy=policy, occupancy=occ, value=value)


def mimic_policy(
    source_mdp: TabularMdp,
    expert: PolicyTable,
    target_mdp: TabularMdp,
    constraint: ConstraintSpec | None = None,
    budget_convention: str = VALUE_BUDGET,
) -> MimicResult:
    """Occupancy matching: the feasible target occupancy L1-closest to the expert's.

    The L1 objective is linearized by writing d = d_expert + u - v with
    u, v >= 0 and minimizing sum(u + v); at a vertex optimum u and v are
    complementary, so the objective equals the L1 distance.
    """
    if (source_mdp.num_states, source_mdp.num_actions) != (
        target_mdp.num_states,
        target_mdp.num_actions,
    ):
        raise DomainError("source and target MDPs must share state/action spaces")
    S, A = target_mdp.num_states, target_mdp.num_actions
    sa = S * A
    d_e = occupancy_measure(source_mdp, expert).d.ravel()

    # Variables: [u, v]; d is eliminated as d = d_e + u - v.
    objective = np.ones(2 * sa)
    flow_lhs, flow_rhs = _flow_rows(target_mdp)
    eq_lhs = np.zeros((S + 1, 2 * sa))
    eq_lhs[:S, :sa] = flow_lhs
    eq_lhs[:S, sa:] = -flow_lhs
    eq_rhs = np.concatenate([flow_rhs - flow_lhs @ d_e, [1.0 - d_e.sum()]])
    eq_lhs[S, :sa] = 1.0
    eq_lhs[S, sa:] = -1.0
    # d >= 0  <=>  v - u <= d_e
    ub_lhs = np.zeros((sa, 2 * sa))
    ub_lhs[:, :sa] = -np.eye(sa)
    ub_lhs[:, sa:] = np.eye(sa)
    ub_rhs = d_e.copy()
    if constraint is not None:
        if constraint.cost.shape != (S, A):
            raise DomainError("constraint cost shape does not match the MDP")
        if budget_convention == VALUE_BUDGET:
            cap = (1.0 - target_mdp.discount) * constraint.budget
        elif budget_convention == OCCUPANCY_BUDGET:
            cap = constraint.budget
        else:
            raise DomainError(f"unknown budget convention {budget_convention!r}")
        c = constraint.cost.values.ravel()
        row = np.concatenate([c, -c])[None, :]
        ub_lhs = np.vstack([ub_lhs, row])
        ub_rhs = np.concatenate([ub_rhs, [cap - c @ d_e]])
    lp = LinearProgram(
        objective=objective, eq_lhs=eq_lhs, eq_rhs=eq_rhs, ub_lhs=ub_lhs, ub_rhs=ub_rhs
    )
    sol = solve(lp)
    if sol.status == INFEASIBLE:
        raise InfeasibleConstraintError("no feasible occupancy satisfies the constraints")
    if sol.status != OPTIMAL:
        raise RuntimeError(f"unexpected LP status {sol.status}")
    d = np.maximum(d_e + sol.x[:sa] - sol.x[sa:], 0.0).reshape(S, A)
    d /= d.sum()
    policy = policy_from_occupancy(OccupancyMeasure(d))
    occ = occupancy_measure(target_mdp, policy)
    l1 = float(np.abs(occ.d.ravel() - d_e).sum())
    return MimicResult(policy=policy, occupancy=occ, l1_distance=l1)


def bc_policy(expert: PolicyTable, support: frozenset[int] | set[int], num_actions: int) -> PolicyTable:
    """Behavioral cloning: the expert on its support, uniform elsewhere."""
    S, A = expert.probs.shape
    if A != num_actions:
        raise DomainError("num_actions does not match the expert table")
    probs = np.full((S, A), 1.0 / A)
    rows = sorted(int(s) for s in support)
    probs[rows] = expert.probs[rows]
    return PolicyTable(probs)


def best_case_reward(
    mdp: TabularMdp,
    expert: PolicyTable,
    support: frozenset[int] | set[int],
    seed: int,
) -> RewardTable:
    """A random member of the expert's feasible set (the "pick any reward" baseline).

    Samples a deterministic extension of the expert off its support, values
    uniform in [-1, 1], and strictly positive advantage gaps (magnitude up to
    0.5) subtracted off the non-prescribed actions, then applies the shaping
    operator.  The result always makes the extension optimal.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    S, A = mdp.num_states, mdp.num_actions
    actions = expert.actions().copy()
    rows = {int(s) for s in support}
    for s in range(S):
        if s in rows:
            if expert.probs[s, actions[s]] != 1.0:
                raise DomainError("best_case_reward requires a deterministic expert on the support")
        else:
            actions[s] = rng.integers(A)
    extension = PolicyTable.from_actions(actions, A)
    v = rng.uniform(-1.0, 1.0, size=S)
    gaps = -rng.uniform(0.0, 0.5, size=(S, A))
    gaps[np.arange(S), actions] = 0.0
    return t_operator(mdp, extension, v, AdvantageGap(gaps))


def suboptimality_bound(
    mdp: TabularMdp,
    r_hat: RewardTable,
    r_ref: RewardTable,
    constraint: ConstraintSpec,
) -> tuple[float, float]:
    """(lhs, rhs) of the estimate-vs-reference planning error bound.

    lhs is the gap between the constrained optimal values of the two rewards;
    rhs is their sup-norm distance divided by (1 - gamma).
    """
    v_hat = plan_constrained(mdp, r_hat, constraint).value
    v_ref = plan_constrained(mdp, r_ref, constraint).value
    rhs = float(np.abs(r_hat.values - r_ref.values).max() / (1.0 - mdp.discount))
    return abs(v_hat - v_ref), rhs
