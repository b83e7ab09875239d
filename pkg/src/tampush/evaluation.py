"""Evaluation protocol: paired success rates over fixed instance sets.

Instances are pre-solved by the stream planner (unsolved ones are
discarded and counted); every policy then sees the identical instance list
and identical per-(instance, seed) rng streams, so rate differences are
not sampling artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .assets import default_domain, default_streams
from .bootstrap import bootstrap_ci
from .execution import execute_bound_plan, first_push_setup
from .scene import sample_scene, scene_to_problem
from .simulator import SimConfig, execute_policy, execute_subroutine_push, skill_success
from .streams import solve_adaptive


@dataclass
class EvalConfig:
    n_instances: int = 100
    n_seeds: int = 20
    instance_seed: int = 1000
    rollout_seed: int = 2000
    budget: float = config.SOLVE_BUDGET
    horizon: int = config.HORIZON

    def desk_scale(self):
        from dataclasses import replace

        return replace(self, n_instances=50, n_seeds=5)


@dataclass
class EvalInstance:
    index: int
    scene: object
    plan: object
    setup: object  # PushSetup at the first push


@dataclass
class EvalResult:
    rates: np.ndarray  # per-seed success rates
    median: float
    ci: tuple
    discarded: int = 0
    task_rates: np.ndarray | None = None

    @classmethod
    def from_rates(cls, rates, discarded=0, task_rates=None, ci_seed=0):
        rates = np.asarray(rates, dtype=float)
        lo, hi = bootstrap_ci(rates, seed=ci_seed)
        return cls(rates=rates, median=float(np.median(rates)), ci=(lo, hi),
                   discarded=discarded, task_rates=task_rates)


def prepare_instances(n: int, cfg: EvalConfig, n_objects: int = 1):
    """Solve fresh instances until n of them have bound plans; returns
    (instances, discarded count)."""
    domain, streams = default_domain(), default_streams()
    instances = []
    discarded = 0
    index = 0
    limit = max(20, n * 20)
    while len(instances) < n and index < limit:
        rng = np.random.default_rng([cfg.instance_seed, index, 31])
        scene = sample_scene(n_objects, rng, n_graspable=n_objects - 1)
        problem = scene_to_problem(scene, name=f"eval-{index}")
        result = solve_adaptive(
            domain, streams, problem,
            budget=cfg.budget, seed=cfg.instance_seed * 7919 + index, scene=scene,
        )
        if result.ok:
            setup = first_push_setup(scene, result.plan)
            if setup is not None:
                instances.append(EvalInstance(index, scene, result.plan, setup))
            else:
                discarded += 1
        else:
            discarded += 1
        index += 1
    return instances, discarded


def _rollout_rng(cfg: EvalConfig, instance: EvalInstance, seed_idx: int):
    return np.random.default_rng([cfg.rollout_seed, instance.index, seed_idx, 47])


def evaluate_executor(executor, instances, cfg: EvalConfig) -> np.ndarray:
    """Per-seed success rates of executor(instance, rng) -> bool."""
    rates = np.empty(cfg.n_seeds)
    for s in range(cfg.n_seeds):
        wins = 0
        for inst in instances:
            if executor(inst, _rollout_rng(cfg, inst, s)):
                wins += 1
        rates[s] = wins / len(instances)
    return rates


def subroutine_executor(sim_cfg: SimConfig, horizon: int = config.HORIZON):
    def run(inst: EvalInstance, rng) -> bool:
        traj, state = execute_subroutine_push(
            inst.setup.state, inst.setup.object_index, inst.setup.path,
            inst.setup.goal_world, sim_cfg, rng, horizon=horizon,
        )
        return skill_success(state, inst.setup.object_index, inst.setup.goal_world)

    return run


def policy_executor(policy, sim_cfg: SimConfig, horizon: int = config.HORIZON):
    def run(inst: EvalInstance, rng) -> bool:
        traj, state = execute_policy(
            inst.setup.state, inst.setup.object_index, inst.setup.goal_world,
            policy, horizon, sim_cfg, rng,
        )
        return skill_success(state, inst.setup.object_index, inst.setup.goal_world)

    return run


def evaluate_policy(policy, instances, cfg: EvalConfig, sim_cfg: SimConfig) -> np.ndarray:
    """Skill-level success rates per seed for a closed-loop policy (or the
    scripted subroutine when policy is None)."""
    if policy is None:
        executor = subroutine_executor(sim_cfg, cfg.horizon)
    else:
        executor = policy_executor(policy, sim_cfg, cfg.horizon)
    return evaluate_executor(executor, instances, cfg)


def evaluate_long_horizon(n_objects: int, policy, cfg: EvalConfig, sim_cfg: SimConfig):
    """Full task execution with the learned (or scripted) push plugged into
    the planner's bound plans; reports per-push and task-level rates."""
    assert n_objects >= 1
    instances, discarded = prepare_instances(cfg.n_instances, cfg, n_objects=n_objects)
    push_rates = np.empty(cfg.n_seeds)
    task_rates = np.empty(cfg.n_seeds)
    for s in range(cfg.n_seeds):
        push_wins = 0
        push_total = 0
        task_wins = 0
        for inst in instances:
            rng = _rollout_rng(cfg, inst, s)
            if policy is not None:
                policy.reset()
            res = execute_bound_plan(
                inst.scene, inst.plan, sim_cfg, rng, policy=policy, horizon=cfg.horizon,
            )
            push_wins += sum(res.push_successes)
            push_total += len(res.push_successes)
            task_wins += int(res.task_success)
        push_rates[s] = push_wins / max(1, push_total)
        task_rates[s] = task_wins / len(instances)
    return EvalResult.from_rates(push_rates, discarded=discarded, task_rates=task_rates)
