"""Execution of bound plans in the simulator.

move/pick/place/align are deterministic and reliable (their motions were
collision-checked at binding time, so they apply instantly); push runs
tick by tick through the stochastic contact model, either as the scripted
open-loop subroutine or as a closed-loop learned policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .geometry import Pose2
from .kinematics import fk_tuple
from .simulator import (
    REST,
    SimConfig,
    WorldState,
    execute_policy,
    execute_subroutine_push,
    skill_success,
    task_success,
    world_from_scene,
)
from .streams import BoundPlan


@dataclass
class PushSetup:
    """World state right after align, plus everything the push needs."""

    state: WorldState
    object_index: int
    object_name: str
    path: np.ndarray  # planned push waypoints
    goal_world: np.ndarray  # (2,) push target in world coordinates


@dataclass
class ExecutionResult:
    final_state: WorldState
    push_trajectories: list = field(default_factory=list)
    push_successes: list = field(default_factory=list)
    task_success: bool = False


def _apply_step(scene, state: WorldState, step, values) -> WorldState:
    """Instant application of one deterministic skill."""
    state = state.copy()
    name = step.name
    if name == "move_base":
        _, q2, _t = step.args
        state.arm = REST.copy()
        target: Pose2 = values[q2]
        if state.attached is not None:
            idx, rel = state.attached
            ex, ey, eth = fk_tuple(target.x, target.y, target.theta, REST[0], REST[1], REST[2])
            state.block_poses[idx] = Pose2(ex, ey, eth).compose(rel).to_array()
        state.base = target
    elif name == "pick":
        _a, o, _p, g, _q, t = step.args
        path = values[t]
        state.arm = path[-1].copy()
        idx = scene.block_index(o)
        state.attached = (idx, values[g])
    elif name == "place":
        _a, o, p, _g, _q, t = step.args
        path = values[t]
        state.arm = path[-1].copy()
        idx = scene.block_index(o)
        state.block_poses[idx] = values[p].to_array()
        state.attached = None
    elif name == "align":
        _a, _o, _p1, _p2, _g, _q0, q2, _t = step.args
        state.arm = values[q2].copy()
    else:
        raise ValueError(f"unknown skill {name!r}")
    return state


def iter_push_setups(scene, plan: BoundPlan, state: WorldState | None = None):
    """Generator walking the plan: deterministic skills apply as
    encountered, each push yields a PushSetup and expects the post-push
    WorldState via .send(); the final state is the generator's return
    value (StopIteration.value)."""
    if state is None:
        state = world_from_scene(scene)
    for step in plan.steps:
        if step.name == "push":
            _a, o, _p1, p2, _g, _q0, _q1, t = step.args
            idx = scene.block_index(o)
            setup = PushSetup(
                state=state,
                object_index=idx,
                object_name=o,
                path=plan.values[t],
                goal_world=plan.values[p2].xy,
            )
            state = yield setup
        else:
            state = _apply_step(scene, state, step, plan.values)
    return state


def execute_bound_plan(
    scene,
    plan: BoundPlan,
    cfg: SimConfig,
    rng,
    policy=None,
    horizon: int = config.HORIZON,
    seed: int = 0,
) -> ExecutionResult:
    """Run the whole plan; pushes use the policy if given, the scripted
    subroutine otherwise."""
    result = ExecutionResult(final_state=world_from_scene(scene))
    gen = iter_push_setups(scene, plan)
    state = None
    try:
        setup = gen.send(None)
        while True:
            if policy is None:
                traj, state = execute_subroutine_push(
                    setup.state, setup.object_index, setup.path,
                    setup.goal_world, cfg, rng, horizon=horizon, seed=seed,
                )
            else:
                traj, state = execute_policy(
                    setup.state, setup.object_index, setup.goal_world,
                    policy, horizon, cfg, rng, seed=seed,
                )
            result.push_trajectories.append(traj)
            result.push_successes.append(
                skill_success(state, setup.object_index, setup.goal_world)
            )
            setup = gen.send(state)
    except StopIteration as stop:
        result.final_state = stop.value
    result.task_success = task_success(result.final_state, scene)
    return result


def first_push_setup(scene, plan: BoundPlan) -> PushSetup | None:
    """Deterministic prefix up to the first push (Experiment-1 instances)."""
    gen = iter_push_setups(scene, plan)
    try:
        return gen.send(None)
    except StopIteration:
        return None
