"""Command-line front end.

Subcommands: centroid, estimate, simulate, plan, mimic, geometry, gridworld,
render.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import mclab
from .centroids import CentroidRequest, centroid_birl, centroid_mce, centroid_opt, constant_fit, affine_fit
from .errors import DomainError
from .estimators import estimate_birl, estimate_mce, estimate_opt, simulate_expert
from .geometry import BIRL, MCE, OPT, BehaviorModel, BoundedSetParams, eta_birl, eta_mce
from .gridworld import build_gridworld, run_scenario, spec_from_dict
from .mdp import OccupancyMeasure, PolicyTable, RewardTable, TabularMdp
from .planning import mimic_policy, plan_constrained, plan_unconstrained
from . import serialization as ser
from .mdp import occupancy_measure, policy_evaluation


def _model_from_args(args) -> BehaviorModel:
    if args.model == OPT:
        return BehaviorModel.opt()
    if args.model == MCE:
        return BehaviorModel.mce(args.lam)
    return BehaviorModel.birl(args.beta)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_centroid(args) -> int:
    model = _model_from_args(args)
    policy = ser.load_policy(args.policy)
    num_states, num_actions = policy.probs.shape
    if model.kind == OPT:
        if args.support is None:
            raise DomainError("the OPT centroid needs --support")
        support = ser.load_support(args.support)
    else:
        support = frozenset(range(num_states))
    req = CentroidRequest(
        expert=policy, support=support, model=model, num_actions=num_actions
    )
    table = {OPT: centroid_opt, MCE: centroid_mce, BIRL: centroid_birl}[model.kind](req)
    _emit(ser.reward_to_dict(table), args.out)
    return 0


def _cmd_estimate(args) -> int:
    data = ser.load_trajectories(args.data)
    dims = (args.num_states, args.num_actions)
    if args.model == OPT:
        table = estimate_opt(data, dims)
    elif args.model == MCE:
        table = estimate_mce(data, dims, args.pi_min_prime, count_all=args.count_all)
    else:
        table = estimate_birl(data, dims, args.pi_min_prime, count_all=args.count_all)
    _emit(ser.reward_to_dict(table), args.out)
    return 0


def _cmd_simulate(args) -> int:
    mdp = ser.load_mdp(args.mdp)
    policy = ser.load_policy(args.policy)
    data = simulate_expert(mdp, policy, args.n, args.h, args.seed)
    ser.save_trajectories(data, args.out)
    return 0


def _cmd_plan(args) -> int:
    mdp = ser.load_mdp(args.mdp)
    reward = ser.load_reward(args.reward)
    if args.constraint:
        spec = ser.load_constraint(args.constraint)
        plan = plan_constrained(mdp, reward, spec, args.budget_convention)
        policy, occ, value = plan.policy, plan.occupancy, plan.value
    else:
        policy = plan_unconstrained(mdp, reward)
        occ = occupancy_measure(mdp, policy)
        value = float(policy_evaluation(mdp, policy, reward).v[mdp.initial_state])
    _emit(
        {
            "policy": ser.policy_to_dict(policy),
            "occupancy": ser.occupancy_to_dict(occ),
            "value": value,
        },
        args.out,
    )
    return 0


def _cmd_mimic(args) -> int:
    source = ser.load_mdp(args.source_mdp)
    target = ser.load_mdp(args.target_mdp)
    policy = ser.load_policy(args.policy)
    constraint = ser.load_constraint(args.constraint) if args.constraint else None
    result = mimic_policy(source, policy, target, constraint)
    _emit(
        {
            "policy": ser.policy_to_dict(result.policy),
            "occupancy": ser.occupancy_to_dict(result.occupancy),
            "l1_distance": result.l1_distance,
        },
        args.out,
    )
    return 0


def _sigmas(estimate: float, target: float, std_error: float) -> float:
    if std_error == 0:
        return 0.0 if estimate == target else float("inf")
    return abs(estimate - target) / std_error


def _check_prop1(n: int, seed: int) -> dict:
    mdp = mclab.fig_two_state_chain(0.999)
    policy = PolicyTable.from_actions([0, 0], 2)
    est = mclab.mc_volume_fraction(mdp, policy, BehaviorModel.opt(), (-1.0, 1.0), n, seed)
    target = 1.0 / 6.0
    return {
        "check": "prop1",
        "estimate": est.mean,
        "std_error": est.std_error,
        "target": target,
        "sigmas_off": _sigmas(est.mean, target, est.std_error),
        "pass": abs(est.mean - target) <= 0.01,
    }


def _check_prop2(n: int, seed: int) -> dict:
    mdp = TabularMdp(1, 2, 0, np.ones((1, 2, 1)), 0.9)
    lengths = [
        mclab.segment_volume_1d(mdp, PolicyTable([[0.5, 0.5]]), BehaviorModel.mce(1.0), 1.0),
        mclab.segment_volume_1d(
            mdp, PolicyTable([[1.0 / 3.0, 2.0 / 3.0]]), BehaviorModel.mce(1.0), 1.0
        ),
    ]
    targets = [2.0, 2.0 - float(np.log(2.0))]
    ok = all(abs(l - t) <= 1e-12 for l, t in zip(lengths, targets))
    return {
        "check": "prop2",
        "estimate": lengths,
        "std_error": [0.0, 0.0],
        "target": targets,
        "sigmas_off": 0.0 if ok else float("inf"),
        "pass": ok,
    }


def _prop4_instance(seed: int) -> TabularMdp:
    from .mdp import random_mdp

    rng = np.random.Generator(np.random.Philox(key=seed ^ 0x9E3779B9))
    return random_mdp(2, 2, 0.5, rng)


def _check_prop4(n: int, seed: int) -> dict:
    mdp = _prop4_instance(seed)
    params = BoundedSetParams(c1=1.0, c2=1.0, model=BehaviorModel.opt())
    from .geometry import bounding_box

    lo, hi = bounding_box(params, mdp.discount)
    box_volume = (hi - lo) ** (mdp.num_states * mdp.num_actions)
    target = 2.0**mdp.num_states  # c1 = c2 = 1
    estimates, errors, sigmas = [], [], []
    for idx, actions in enumerate([[0, 0], [0, 1], [1, 0], [1, 1]]):
        policy = PolicyTable.from_actions(actions, 2)
        est = mclab.mc_volume_fraction(
            mdp, policy, BehaviorModel.opt(), (lo, hi), n, seed + idx, params=params
        )
        estimates.append(est.mean * box_volume)
        errors.append(est.std_error * box_volume)
        sigmas.append(_sigmas(est.mean * box_volume, target, est.std_error * box_volume))
    return {
        "check": "prop4",
        "estimate": estimates,
        "std_error": errors,
        "target": target,
        "sigmas_off": max(sigmas),
        "pass": max(sigmas) <= 3.0,
    }


def _check_centroid_opt(n: int, seed: int) -> dict:
    mdp = _prop4_instance(seed)
    expert = PolicyTable.from_actions([0, 0], 2)
    support = frozenset({0})
    params = BoundedSetParams(c1=1.0, c2=1.0, model=BehaviorModel.opt())
    est = mclab.mc_centroid_opt(mdp, expert, support, params, n, seed)
    req = CentroidRequest(
        expert=expert, support=support, model=BehaviorModel.opt(), num_actions=2
    )
    closed = centroid_opt(req)
    fit = affine_fit(RewardTable(est.mean), closed)
    bound = max(0.02, 4.0 * float(np.max(est.std_error)))
    ok = fit.alpha > 0 and fit.residual_sup <= bound
    return {
        "check": "centroid-opt",
        "estimate": fit.residual_sup,
        "std_error": float(np.max(est.std_error)),
        "target": 0.0,
        "sigmas_off": fit.residual_sup / max(bound, 1e-300) * 3.0,
        "pass": bool(ok),
    }


def _check_centroid_manifold(n: int, seed: int) -> dict:
    from .mdp import random_mdp

    rng = np.random.Generator(np.random.Philox(key=seed ^ 0xA5A5A5))
    mdp = random_mdp(3, 2, 0.8, rng)
    probs = rng.dirichlet(np.ones(2), size=3) * 0.8 + 0.1
    probs /= probs.sum(axis=1, keepdims=True)
    policy = PolicyTable(probs)
    worst = 0.0
    for eta in (eta_mce(policy, 1.0), eta_birl(policy, 1.0)):
        est = mclab.mc_centroid_manifold(mdp, eta, 2.0, n, seed)
        gap = np.abs(est.mean - eta.values)
        worst = max(worst, float((gap / np.maximum(4.0 * est.std_error, 1e-300)).max()))
    return {
        "check": "centroid-manifold",
        "estimate": worst,
        "std_error": 1.0,
        "target": 0.0,
        "sigmas_off": worst * 4.0,
        "pass": worst <= 1.0,
    }


def _check_centroid_prior(n: int, seed: int) -> dict:
    mdp = _prop4_instance(seed)
    params = BoundedSetParams(c1=1.0, c2=1.0, model=BehaviorModel.opt())
    est = mclab.mc_centroid_prior(mdp, params, n, seed)
    _, residual = constant_fit(RewardTable(est.mean))
    bound = 4.0 * float(np.max(est.std_error))
    return {
        "check": "centroid-prior",
        "estimate": residual,
        "std_error": float(np.max(est.std_error)),
        "target": 0.0,
        "sigmas_off": residual / max(float(np.max(est.std_error)), 1e-300),
        "pass": residual <= bound,
    }


def _check_transfer_ratio(n: int, seed: int) -> dict:
    estimates, errors, sigmas, targets = [], [], [], []
    for c2 in (1.0, 3.0):
        est = mclab.new_env_bias_ratio(c2, n, seed)
        target = mclab.new_env_bias_ratio_closed_form(c2)
        estimates.append(est.mean)
        errors.append(est.std_error)
        targets.append(target)
        sigmas.append(_sigmas(est.mean, target, est.std_error))
    half_gap_ok = all(
        abs(e - 0.5) >= 5.0 * s for e, s in zip(estimates, errors)
    )
    return {
        "check": "transfer-ratio",
        "estimate": estimates,
        "std_error": errors,
        "target": targets,
        "sigmas_off": max(sigmas),
        "pass": max(sigmas) <= 3.0 and half_gap_ok,
    }


GEOMETRY_CHECKS = {
    "prop1": _check_prop1,
    "prop2": _check_prop2,
    "prop4": _check_prop4,
    "centroid-opt": _check_centroid_opt,
    "centroid-manifold": _check_centroid_manifold,
    "centroid-prior": _check_centroid_prior,
    "transfer-ratio": _check_transfer_ratio,
}


def run_geometry_check(check: str, n: int, seed: int) -> dict:
    if check not in GEOMETRY_CHECKS:
        raise DomainError(f"unknown geometry check {check!r}")
    return GEOMETRY_CHECKS[check](n, seed)


def _cmd_geometry(args) -> int:
    report = run_geometry_check(args.check, args.n, args.seed)
    _emit(report, args.out)
    return 0 if report["pass"] else 1


def _cmd_gridworld(args) -> int:
    if args.mode == "build":
        with open(args.spec) as fh:
            spec = spec_from_dict(json.load(fh), base_dir=Path(args.spec).parent)
        mdp, constraint = build_gridworld(spec)
        out_dir = Path(args.out_dir)
        ser.save_mdp(mdp, out_dir / "mdp.json")
        if constraint is not None:
            ser.save_constraint(constraint, out_dir / "constraint.json")
        return 0
    name = args.name or Path(args.config).stem
    run_scenario(name, args.config, args.out_dir)
    return 0


def _cmd_render(args) -> int:
    with open(args.spec) as fh:
        spec = spec_from_dict(json.load(fh), base_dir=Path(args.spec).parent)
    occupancy = None
    if args.occupancy:
        with open(args.occupancy) as fh:
            occupancy = OccupancyMeasure(np.asarray(json.load(fh)["d"], dtype=float))
    policy = ser.load_policy(args.policy) if args.policy else None
    support = ser.load_support(args.support) if args.support else None
    from .render import render_grid_svg

    render_grid_svg(occupancy, policy, spec, args.out, support=support)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewardcentroids",
        description="Reward centroids for generalizing expert behavior",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--model", choices=[OPT, MCE, BIRL], required=True)
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--beta", type=float, default=1.0)

    p = sub.add_parser("centroid", help="closed-form centroid of an expert policy")
    add_model_flags(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--support")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_centroid)

    p = sub.add_parser("estimate", help="estimate a centroid from trajectories")
    add_model_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--num-states", type=int, required=True)
    p.add_argument("--num-actions", type=int, required=True)
    p.add_argument("--pi-min-prime", type=float, default=1e-6)
    p.add_argument("--count-all", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("simulate", help="roll out expert trajectories")
    p.add_argument("--mdp", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("plan", help="plan with a reward, optionally constrained")
    p.add_argument("--mdp", required=True)
    p.add_argument("--reward", required=True)
    p.add_argument("--constraint")
    p.add_argument("--budget-convention", choices=["value", "occupancy"], default="value")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("mimic", help="occupancy-matching baseline")
    p.add_argument("--source-mdp", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--target-mdp", required=True)
    p.add_argument("--constraint")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_mimic)

    p = sub.add_parser("geometry", help="Monte-Carlo geometry checks")
    p.add_argument("--check", choices=sorted(GEOMETRY_CHECKS), required=True)
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_geometry)

    p = sub.add_parser("gridworld", help="build a grid MDP or run a scenario")
    mode = p.add_subparsers(dest="mode", required=True)
    b = mode.add_parser("build")
    b.add_argument("--spec", required=True)
    b.add_argument("--out-dir", required=True)
    b.set_defaults(func=_cmd_gridworld, mode="build")
    r = mode.add_parser("run")
    r.add_argument("--config", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--name")
    r.set_defaults(func=_cmd_gridworld, mode="run")

    p = sub.add_parser("render", help="render a policy/occupancy SVG")
    p.add_argument("--spec", required=True)
    p.add_argument("--occupancy")
    p.add_argument("--policy")
    p.add_argument("--support")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
