"""JSON formats shared by the CLI and the scenario pipeline."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .mdp import OccupancyMeasure, PolicyTable, RewardTable, TabularMdp
from .planning import ConstraintSpec
from .estimators import TrajectoryDataset


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read JSON from {path}: {exc}") from exc


def _dump_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise DomainError(f"{where} is missing required key {key!r}")
    return doc[key]


def mdp_to_dict(mdp: TabularMdp) -> dict:
    return {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "initial_state": mdp.initial_state,
        "gamma": mdp.discount,
        "transitions": mdp.transitions.tolist(),
    }


def mdp_from_dict(doc: dict) -> TabularMdp:
    return TabularMdp(
        num_states=int(_require(doc, "num_states", "MDP document")),
        num_actions=int(_require(doc, "num_actions", "MDP document")),
        initial_state=int(_require(doc, "initial_state", "MDP document")),
        transitions=np.asarray(_require(doc, "transitions", "MDP document"), dtype=float),
        discount=float(_require(doc, "gamma", "MDP document")),
    )


def load_mdp(path) -> TabularMdp:
    return mdp_from_dict(_load_json(path))


def save_mdp(mdp: TabularMdp, path) -> None:
    _dump_json(mdp_to_dict(mdp), path)


def reward_to_dict(r: RewardTable) -> dict:
    return {"values": r.values.tolist()}


def reward_from_dict(doc: dict) -> RewardTable:
    return RewardTable(np.asarray(_require(doc, "values", "reward document"), dtype=float))


def load_reward(path) -> RewardTable:
    return reward_from_dict(_load_json(path))


def save_reward(r: RewardTable, path) -> None:
    _dump_json(reward_to_dict(r), path)


def policy_to_dict(policy: PolicyTable) -> dict:
    return {"probs": policy.probs.tolist(), "deterministic": policy.deterministic}


def policy_from_dict(doc: dict) -> PolicyTable:
    return PolicyTable(
        probs=np.asarray(_require(doc, "probs", "policy document"), dtype=float),
        deterministic=bool(doc.get("deterministic", False)),
    )


def load_policy(path) -> PolicyTable:
    return policy_from_dict(_load_json(path))


def save_policy(policy: PolicyTable, path) -> None:
    _dump_json(policy_to_dict(policy), path)


def constraint_to_dict(spec: ConstraintSpec) -> dict:
    return {"cost": spec.cost.values.tolist(), "budget": spec.budget}


def constraint_from_dict(doc: dict) -> ConstraintSpec:
    return ConstraintSpec(
        cost=RewardTable(np.asarray(_require(doc, "cost", "constraint document"), dtype=float)),
        budget=float(_require(doc, "budget", "constraint document")),
    )


def load_constraint(path) -> ConstraintSpec:
    return constraint_from_dict(_load_json(path))


def save_constraint(spec: ConstraintSpec, path) -> None:
    _dump_json(constraint_to_dict(spec), path)


def load_support(path) -> frozenset[int]:
    doc = _load_json(path)
    return frozenset(int(s) for s in _require(doc, "states", "support document"))


def save_support(states, path) -> None:
    _dump_json({"states": sorted(int(s) for s in states)}, path)


def occupancy_to_dict(occ: OccupancyMeasure) -> dict:
    return {"d": occ.d.tolist()}


def save_trajectories(data: TrajectoryDataset, path) -> None:
    """One JSON object per line: {"states": [...], "actions": [...]}."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for i in range(data.num_trajectories):
            fh.write(
                json.dumps(
                    {
                        "states": data.states[i].tolist(),
                        "actions": data.actions[i].tolist(),
                    }
                )
            )
            fh.write("\n")


def load_trajectories(path) -> TrajectoryDataset:
    states, actions = [], []
    try:
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                states.append(_require(doc, "states", f"trajectory line {line_no}"))
                actions.append(_require(doc, "actions", f"trajectory line {line_no}"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read trajectories from {path}: {exc}") from exc
    if not states:
        raise DomainError(f"no trajectories in {path}")
    lengths = {len(s) for s in states} | {len(a) for a in actions}
    if len(lengths) != 1:
        raise DomainError("all trajectories must share one length")
    return TrajectoryDataset(states=np.asarray(states), actions=np.asarray(actions))


def write_report(doc: dict, path) -> None:
    _dump_json(doc, path)
