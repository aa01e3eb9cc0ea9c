"""Gridworld construction and the end-to-end scenario pipeline.

The grid has five actions (left, right, up, down, stay); directional moves
are deterministic, moves off the grid keep the agent in place, and a
"reversed" environment swaps left/right and up/down while stay is unchanged.
Blocked cells become unit-cost states under a zero budget.

A scenario config wires one experiment: an expert fixture observed in a
source grid, an optional target grid (new dynamics, discount, start, or
constraints), a behavior model, an estimator (or the exact infinite-data
limit), and a planner.  Running a scenario produces a policy, its occupancy
in the environment it runs in, SVG renderings, and a JSON report; outputs
are byte-deterministic given the config and seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .centroids import CentroidRequest, centroid_opt
from .errors import DomainError
from .estimators import (
    estimate_birl,
    estimate_mce,
    estimate_opt,
    exact_estimate_birl,
    exact_estimate_mce,
    simulate_expert,
)
from .geometry import BIRL, MCE, OPT, BehaviorModel
from .mdp import (
    OccupancyMeasure,
    PolicyTable,
    RewardTable,
    TabularMdp,
    occupancy_measure,
    policy_evaluation,
    reachable_support,
)
from .planning import (
    ConstraintSpec,
    bc_policy,
    best_case_reward,
    mimic_policy,
    plan_constrained,
    plan_unconstrained,
)
from .render import render_grid_svg
from .serialization import constraint_from_dict, load_policy, write_report

LEFT, RIGHT, UP, DOWN, STAY = range(5)
NUM_GRID_ACTIONS = 5


@dataclass(frozen=True)
class GridworldSpec:
    """Geometry and dynamics flags of one grid environment."""

    width: int
    height: int
    initial_cell: tuple[int, int]
    gamma: float
    reversed: bool = False
    blocked_cells: tuple[tuple[int, int], ...] = ()
    expert_policy_file: str | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError("grid dimensions must be positive")
        if not (0.0 <= self.gamma < 1.0):
            raise DomainError("gamma must lie in [0, 1)")
        cells = [self.initial_cell, *self.blocked_cells]
        for (x, y) in cells:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise DomainError(f"cell {(x, y)} outside the grid")
        if self.initial_cell in self.blocked_cells:
            raise DomainError("the initial cell cannot be blocked")
        object.__setattr__(self, "initial_cell", tuple(self.initial_cell))
        object.__setattr__(
            self, "blocked_cells", tuple(tuple(c) for c in self.blocked_cells)
        )

    @property
    def num_states(self) -> int:
        return self.width * self.height

    def state_index(self, x: int, y: int) -> int:
        return y * self.width + x

    def cell_of(self, s: int) -> tuple[int, int]:
        return s % self.width, s // self.width


def spec_from_dict(doc: dict, base_dir: Path | None = None) -> GridworldSpec:
    policy_file = doc.get("expert_policy_file")
    if policy_file is not None and base_dir is not None:
        policy_file = str((base_dir / policy_file).resolve())
    return GridworldSpec(
        width=int(doc["width"]),
        height=int(doc["height"]),
        initial_cell=tuple(doc["initial_cell"]),
        gamma=float(doc["gamma"]),
        reversed=bool(doc.get("reversed", False)),
        blocked_cells=tuple(tuple(c) for c in doc.get("blocked_cells", [])),
        expert_policy_file=policy_file,
    )


def build_gridworld(spec: GridworldSpec) -> tuple[TabularMdp, ConstraintSpec | None]:
    """Deterministic grid MDP plus the hard constraint induced by blocked cells."""
    S = spec.num_states
    moves = {LEFT: (-1, 0), RIGHT: (1, 0), UP: (0, -1), DOWN: (0, 1), STAY: (0, 0)}
    if spec.reversed:
        moves = {
            LEFT: moves[RIGHT],
            RIGHT: moves[LEFT],
            UP: moves[DOWN],
            DOWN: moves[UP],
            STAY: moves[STAY],
        }
    p = np.zeros((S, NUM_GRID_ACTIONS, S))
    for y in range(spec.height):
        for x in range(spec.width):
            s = spec.state_index(x, y)
            for a, (dx, dy) in moves.items():
                nx, ny = x + dx, y + dy
                if not (0 <= nx < spec.width and 0 <= ny < spec.height):
                    nx, ny = x, y
                p[s, a, spec.state_index(nx, ny)] = 1.0
    mdp = TabularMdp(
        num_states=S,
        num_actions=NUM_GRID_ACTIONS,
        initial_state=spec.state_index(*spec.initial_cell),
        transitions=p,
        discount=spec.gamma,
    )
    constraint = None
    if spec.blocked_cells:
        cost = np.zeros((S, NUM_GRID_ACTIONS))
        for (x, y) in spec.blocked_cells:
            cost[spec.state_index(x, y), :] = 1.0
        constraint = ConstraintSpec(cost=RewardTable(cost), budget=0.0)
    return mdp, constraint


@dataclass(frozen=True)
class ScenarioReport:
    policy: PolicyTable
    occupancy: OccupancyMeasure
    value: float | None
    svg_paths: list[str] = field(default_factory=list)


def _model_from_config(doc) -> BehaviorModel | None:
    if doc is None:
        return None
    if isinstance(doc, str):
        doc = {"kind": doc}
    kind = doc["kind"]
    if kind == OPT:
        return BehaviorModel.opt()
    if kind == MCE:
        return BehaviorModel.mce(float(doc.get("lambda", 1.0)))
    if kind == BIRL:
        return BehaviorModel.birl(float(doc.get("beta", 1.0)))
    raise DomainError(f"unknown behavior model {kind!r}")


def _scenario_reward(
    config: dict,
    model: BehaviorModel,
    source: TabularMdp,
    expert: PolicyTable,
    support: frozenset[int],
) -> RewardTable:
    estimator = config.get("estimator", "exact")
    pi_min_prime = 1e-6
    if estimator == "exact":
        if model.kind == OPT:
            req = CentroidRequest(
                expert=expert,
                support=support,
                model=model,
                num_actions=source.num_actions,
            )
            return centroid_opt(req)
        if model.kind == MCE:
            return exact_estimate_mce(expert, support, pi_min_prime)
        return exact_estimate_birl(expert, support, pi_min_prime)
    n = int(estimator["n"])
    h = int(estimator["h"])
    pi_min_prime = float(estimator.get("pi_min_prime", pi_min_prime))
    count_all = bool(estimator.get("count_all", False))
    seed = int(config.get("seeds", {}).get("simulate", 0))
    data = simulate_expert(source, expert, n, h, seed)
    dims = (source.num_states, source.num_actions)
    if model.kind == OPT:
        return estimate_opt(data, dims)
    if model.kind == MCE:
        return estimate_mce(data, dims, pi_min_prime, count_all=count_all)
    return estimate_birl(data, dims, pi_min_prime, count_all=count_all)


def run_scenario(name: str, config_path, out_dir) -> ScenarioReport:
    """Execute one committed scenario config end to end.

    Pipeline: build the source and target grids, load the expert fixture,
    produce the planning reward (exact centroid or offline estimate), plan
    with the requested planner, then render the requested outputs under
    out_dir with the scenario name as prefix.
    """
    config_path = Path(config_path)
    out_dir = Path(out_dir)
    with open(config_path) as fh:
        config = json.load(fh)

    source_spec = spec_from_dict(config["gridworld"], base_dir=config_path.parent)
    target_doc = dict(config["gridworld"])
    target_doc.update(config.get("target", {}))
    target_doc["expert_policy_file"] = None
    target_spec = spec_from_dict(target_doc)

    source, _ = build_gridworld(source_spec)
    target, auto_constraint = build_gridworld(target_spec)
    constraint = auto_constraint
    if config.get("constraint") is not None:
        constraint = constraint_from_dict(config["constraint"])

    if source_spec.expert_policy_file is None:
        raise DomainError(f"scenario {name!r} needs an expert policy fixture")
    expert = load_policy(source_spec.expert_policy_file)
    if expert.probs.shape != (source.num_states, source.num_actions):
        raise DomainError("expert fixture shape does not match the grid")
    support = reachable_support(source, expert)

    planner = config.get("planner", "centroid")
    model = _model_from_config(config.get("model"))
    value: float | None
    run_spec = target_spec
    run_support = None

    if planner == "expert":
        policy = expert
        occupancy = occupancy_measure(source, expert)
        value = None
        run_spec = source_spec
        run_support = support
    elif planner == "mimic":
        result = mimic_policy(source, expert, target, constraint)
        policy, occupancy, value = result.policy, result.occupancy, result.l1_distance
    elif planner == "bc":
        policy = bc_policy(expert, support, source.num_actions)
        occupancy = occupancy_measure(target, policy)
        value = None
    elif planner in ("centroid", "best_case"):
        if planner == "centroid":
            if model is None:
                raise DomainError("centroid planning needs a behavior model")
            reward = _scenario_reward(config, model, source, expert, support)
        else:
            seed = int(config.get("seeds", {}).get("best_case", 0))
            reward = best_case_reward(source, expert, support, seed)
        if constraint is not None:
            plan = plan_constrained(target, reward, constraint)
            policy, occupancy, value = plan.policy, plan.occupancy, plan.value
        else:
            policy = plan_unconstrained(target, reward)
            occupancy = occupancy_measure(target, policy)
            value = float(policy_evaluation(target, policy, reward).v[target.initial_state])
    else:
        raise DomainError(f"unknown planner {planner!r}")

    svg_paths: list[str] = []
    outputs = config.get("outputs", ["policy_svg", "report_json"])
    if "policy_svg" in outputs:
        path = render_grid_svg(
            occupancy, policy, run_spec, out_dir / f"{name}_policy.svg", support=run_support
        )
        svg_paths.append(str(path))
    if "occupancy_svg" in outputs:
        path = render_grid_svg(occupancy, None, run_spec, out_dir / f"{name}_occupancy.svg")
        svg_paths.append(str(path))
    if "report_json" in outputs:
        report = {
            "name": name,
            "planner": planner,
            "model": None if model is None else model.kind,
            "value": value,
            "support_size": len(support),
            "support_mass": float(
                occupancy.state_marginal()[sorted(support)].sum()
            ),
            "svg_paths": [Path(p).name for p in svg_paths],
        }
        write_report(report, out_dir / f"{name}_report.json")

    for path in svg_paths:
        if not Path(path).exists():
            raise DomainError(f"expected output {path} missing")
    return ScenarioReport(policy=policy, occupancy=occupancy, value=value, svg_paths=svg_paths)
