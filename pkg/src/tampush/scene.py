"""Scene fixtures and problem-instance generation.

A scene is the table, a goal region, blocks (graspable / pushable / fixed
scenery), and the mobile base.  Problems pair a scene with one goal pose
per movable block; goal poses live inside the region, so task success is
region containment.  Scenes serialize into the PDDL problem files consumed
by the CLI: numeric payload atoms (PoseValue / BaseValue / RegionValue)
attach values to symbolic constants, which keeps the whole instance in one
parseable file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import config
from .geometry import Pose2, seg_point_dist
from .pddl import Atom, TaskProblem, parse_problem, pretty_problem

ARM = "a0"
REGION = "zone"


@dataclass(frozen=True)
class Block:
    name: str
    init_pose: Pose2
    graspable: bool = False
    alignable: bool = False
    fixed: bool = False


@dataclass
class SceneSpec:
    blocks: list
    base_start: Pose2
    goal_poses: dict = field(default_factory=dict)  # block name -> Pose2

    def block_index(self, name: str) -> int:
        for i, b in enumerate(self.blocks):
            if b.name == name:
                return i
        raise KeyError(name)

    def poses_array(self) -> np.ndarray:
        out = np.empty((len(self.blocks), 3))
        for i, b in enumerate(self.blocks):
            out[i] = b.init_pose.to_array()
        return out

    @property
    def movable(self):
        return [b for b in self.blocks if not b.fixed]


def _free_spot(pose_xy, others, min_dist):
    return all(math.hypot(pose_xy[0] - o[0], pose_xy[1] - o[1]) >= min_dist for o in others)


_WRIST_REACH = config.LINK_LENGTHS[0] + config.LINK_LENGTHS[1] - 0.04
_GRIP_BACKOFF = config.BLOCK_HALF + config.FACE_CLEARANCE + config.LINK_LENGTHS[2]


def push_reach_feasible(p1_xy, p2_xy) -> bool:
    """Whether some off-table base placement can cover a straight push from
    p1 to p2: both wrist endpoints must fall within the two-link reach of a
    point outside the table that also keeps clear of the push line.

    The scene sampler rejects goal draws that fail this, the desk-scale
    analog of discarding instances the solver cannot bind.
    """
    dx, dy = p2_xy[0] - p1_xy[0], p2_xy[1] - p1_xy[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        return False
    ux, uy = dx / dist, dy / dist
    w1 = (p1_xy[0] - _GRIP_BACKOFF * ux, p1_xy[1] - _GRIP_BACKOFF * uy)
    w2 = (w1[0] + dx, w1[1] + dy)
    th = config.TABLE_HALF + 1e-3
    for k in range(160):
        t = (k + 0.5) / 160.0
        side = k % 4
        c = -th + 2.0 * th * t
        q = ((th, c), (-th, c), (c, th), (c, -th))[side]
        if math.hypot(q[0] - w1[0], q[1] - w1[1]) > _WRIST_REACH:
            continue
        if math.hypot(q[0] - w2[0], q[1] - w2[1]) > _WRIST_REACH:
            continue
        if seg_point_dist(w1[0], w1[1], w2[0], w2[1], q[0], q[1]) < 0.10:
            continue
        return True
    return False


def sample_scene(n_blocks: int, rng, n_graspable: int | None = None) -> SceneSpec:
    """Uniformly sampled problem instance; exactly one block is pushable.

    Block starts are uniform over the inner table, goals uniform over the
    goal region, both rejection-sampled for spacing.
    """
    if n_graspable is None:
        n_graspable = n_blocks - 1
    assert 0 <= n_graspable < n_blocks or n_blocks == n_graspable == 0
    spread = 0.30
    margin = config.REGION_HALF - 0.04
    while True:
        starts, goals = [], []
        while len(starts) < n_blocks:
            xy = rng.uniform(-spread, spread, 2)
            if _free_spot(xy, starts, 0.13):
                starts.append(xy)
        attempts = 0
        while len(goals) < n_blocks and attempts < 200:
            attempts += 1
            i = len(goals)
            xy = rng.uniform(-margin, margin, 2)
            if not _free_spot(xy, goals, 0.11) or math.hypot(*(xy - starts[i])) < 0.05:
                continue
            pushable = i >= n_graspable
            if pushable and not push_reach_feasible(starts[i], xy):
                continue
            goals.append(xy)
        if len(goals) == n_blocks:
            break
    blocks = []
    goal_poses = {}
    for i in range(n_blocks):
        theta = float(rng.uniform(-math.pi, math.pi))
        graspable = i < n_graspable
        name = f"b{i}"
        blocks.append(
            Block(
                name,
                Pose2(float(starts[i][0]), float(starts[i][1]), theta),
                graspable=graspable,
                alignable=not graspable,
            )
        )
        goal_poses[name] = Pose2(float(goals[i][0]), float(goals[i][1]), theta)
    ring = float(rng.uniform(0.8, 1.1))
    phi = float(rng.uniform(-math.pi, math.pi))
    heading = float(rng.uniform(-math.pi, math.pi))
    base = Pose2(ring * math.cos(phi), ring * math.sin(phi), heading)
    return SceneSpec(blocks, base, goal_poses)


def push_instance(rng) -> SceneSpec:
    """Single pushable block, the Experiment-1 style instance."""
    return sample_scene(1, rng, n_graspable=0)


def canonical_three_object_scene() -> SceneSpec:
    """Fixed 3-block fixture: two graspable, one pushable, spread far apart
    so no single base configuration can work two blocks (minimal plan is
    move/pick/place x2 + move/align/push = 9 steps)."""
    blocks = [
        Block("b0", Pose2(0.33, 0.10, 0.0), graspable=True),
        Block("b1", Pose2(-0.30, 0.28, 0.0), graspable=True),
        Block("b2", Pose2(-0.05, -0.33, 0.0), alignable=True),
    ]
    goals = {
        "b0": Pose2(-0.08, 0.08, 0.0),
        "b1": Pose2(0.08, 0.08, 0.0),
        "b2": Pose2(0.00, -0.08, 0.0),
    }
    return SceneSpec(blocks, Pose2(-1.0, -1.0, 0.0), goals)


def walled_off_scene() -> SceneSpec:
    """Infeasible fixture: the pushable block is ringed by fixed scenery, so
    no collision-free alignment exists and every binding attempt fails."""
    target = Block("b0", Pose2(0.15, 0.05, 0.0), alignable=True)
    blocks = [target]
    r = 0.105
    for k in range(8):
        ang = 2.0 * math.pi * k / 8.0
        blocks.append(
            Block(
                f"wall{k}",
                Pose2(0.15 + r * math.cos(ang), 0.05 + r * math.sin(ang), ang),
                fixed=True,
            )
        )
    return SceneSpec(blocks, Pose2(-1.0, 0.0, 0.0), {"b0": Pose2(-0.05, 0.0, 0.0)})


# -- PDDL problem synthesis ----------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def scene_to_problem_text(scene: SceneSpec, name: str = "instance") -> str:
    objects = [ARM, REGION]
    init = [
        f"(controllable {ARM})",
        f"(handempty {ARM})",
        "(canmove)",
        f"(region {REGION})",
        f"(regionvalue {REGION} 0.0 0.0 {_fmt(config.REGION_HALF)})",
        "(bconf q-init)",
        "(atbconf q-init)",
        f"(basevalue q-init {_fmt(scene.base_start.x)} {_fmt(scene.base_start.y)} {_fmt(scene.base_start.theta)})",
    ]
    objects.append("q-init")
    goal = []
    for b in scene.blocks:
        objects.append(b.name)
        pi = f"p-{b.name}-i"
        objects.append(pi)
        p = b.init_pose
        init.append(f"(atpose {b.name} {pi})")
        init.append(f"(posevalue {pi} {_fmt(p.x)} {_fmt(p.y)} {_fmt(p.theta)})")
        if b.fixed:
            init.append(f"(fixed {b.name})")
            continue
        init.append(f"(pose {b.name} {pi})")
        init.append(f"(placeable {b.name})")
        if b.graspable:
            init.append(f"(graspable {b.name})")
        else:
            init.append(f"(alignable {b.name})")
        g = scene.goal_poses[b.name]
        pg = f"p-{b.name}-g"
        objects.append(pg)
        init.append(f"(pose {b.name} {pg})")
        init.append(f"(contained {b.name} {pg} {REGION})")
        init.append(f"(posevalue {pg} {_fmt(g.x)} {_fmt(g.y)} {_fmt(g.theta)})")
        goal.append(f"(atpose {b.name} {pg})")
    costs = "\n    ".join(
        f"(= ({fn}) 1)" for fn in ("movecost", "pickcost", "placecost", "aligncost", "pushcost")
    )
    init_text = "\n    ".join(init)
    lines = [
        f"(define (problem {name})",
        "  (:domain planar-push)",
        f"  (:objects {' '.join(objects)})",
        "  (:init",
        f"    {init_text}",
        f"    {costs}",
        "  )",
        f"  (:goal (and {' '.join(goal)}))",
        "  (:metric minimize (total-cost))",
        ")",
    ]
    return "\n".join(lines) + "\n"


def scene_to_problem(scene: SceneSpec, name: str = "instance") -> TaskProblem:
    return parse_problem(scene_to_problem_text(scene, name))


def value_map_from_problem(problem: TaskProblem) -> dict:
    """Constant name -> value, decoded from the numeric payload atoms."""
    values = {}
    for atom in problem.init:
        if atom.predicate in ("posevalue", "basevalue"):
            name, x, y, th = atom.args
            values[name] = Pose2(float(x), float(y), float(th))
        elif atom.predicate == "regionvalue":
            name, x, y, half = atom.args
            values[name] = (float(x), float(y), float(half))
    return values


def scene_from_problem(problem: TaskProblem) -> SceneSpec:
    values = value_map_from_problem(problem)
    roles: dict[str, dict] = {}
    at_pose = {}
    for atom in problem.init:
        if atom.predicate == "atpose":
            at_pose[atom.args[0]] = atom.args[1]
        elif atom.predicate in ("graspable", "alignable", "fixed", "placeable"):
            roles.setdefault(atom.args[0], {})[atom.predicate] = True
        elif atom.predicate == "atbconf":
            base_name = atom.args[0]
    blocks = []
    goal_poses = {}
    goal_pose_names = {a.args[0]: a.args[1] for a in problem.goal if a.predicate == "atpose"}
    for name in sorted(at_pose):
        r = roles.get(name, {})
        blocks.append(
            Block(
                name,
                values[at_pose[name]],
                graspable=r.get("graspable", False),
                alignable=r.get("alignable", False),
                fixed=r.get("fixed", False),
            )
        )
        if name in goal_pose_names:
            goal_poses[name] = values[goal_pose_names[name]]
    return SceneSpec(blocks, values[base_name], goal_poses)


def problem_goal_atoms(scene: SceneSpec):
    return tuple(
        Atom("atpose", (b.name, f"p-{b.name}-g")) for b in scene.blocks if not b.fixed
    )


def write_problem_fixture(scene: SceneSpec, path, name="instance"):
    text = scene_to_problem_text(scene, name)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def apply_pose(scene: SceneSpec, name: str, pose: Pose2) -> SceneSpec:
    idx = scene.block_index(name)
    blocks = list(scene.blocks)
    blocks[idx] = replace(blocks[idx], init_pose=pose)
    return SceneSpec(blocks, scene.base_start, dict(scene.goal_poses))
