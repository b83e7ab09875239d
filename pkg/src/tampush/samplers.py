"""Geometric samplers behind the stream declarations.

Each sampler takes resolved input values plus a binding context (the scene
and the symbolic object poses at the plan step being bound), and returns a
tuple of output values or None on failure.  Collision tests for the
negated Unsafe* preconditions run eagerly here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .collision import (
    base_position_free,
    block_pose_free,
    carried_block_free,
    collision_free,
)
from .geometry import Pose2, seg_point_dist
from .kinematics import forward_kinematics, inverse_kinematics
from .motion import interpolate_joint, rrt_connect
from .scene import SceneSpec

REST = np.array(config.REST_ARM)
_ARM_BOUNDS = (
    -config.JOINT_LIMIT * np.ones(3),
    config.JOINT_LIMIT * np.ones(3),
)
_BASE_LIMIT = config.WORKSPACE_HALF - config.BASE_RADIUS
_BASE_BOUNDS = (-_BASE_LIMIT * np.ones(2), _BASE_LIMIT * np.ones(2))


@dataclass
class BindContext:
    """World snapshot at the plan step being bound."""

    scene: SceneSpec
    poses: dict = field(default_factory=dict)  # block name -> Pose2

    @classmethod
    def initial(cls, scene: SceneSpec):
        return cls(scene, {b.name: b.init_pose for b in scene.blocks})

    def index(self, name: str) -> int:
        return self.scene.block_index(name)

    def poses_array(self) -> np.ndarray:
        out = np.empty((len(self.scene.blocks), 3))
        for i, b in enumerate(self.scene.blocks):
            pose = self.poses.get(b.name, b.init_pose)
            out[i, 0], out[i, 1], out[i, 2] = pose.x, pose.y, pose.theta
        return out

    def goal_of(self, name: str):
        return self.scene.goal_poses.get(name)


def aligned_gripper_pose(p1: Pose2, p2: Pose2):
    """Gripper pose behind the block on the p2->p1 line, face orthogonal to
    the push direction, offset by block half-side plus face clearance."""
    dx, dy = p2.x - p1.x, p2.y - p1.y
    dist = math.hypot(dx, dy)
    if dist < 1e-6:
        return None
    ux, uy = dx / dist, dy / dist
    off = config.BLOCK_HALF + config.FACE_CLEARANCE
    return Pose2(p1.x - ux * off, p1.y - uy * off, math.atan2(uy, ux))


def sample_align(values, ctx: BindContext, rng):
    o, p1, p2 = values
    grip = aligned_gripper_pose(p1, p2)
    if grip is None:
        return None
    rel = grip.inverse().compose(p1)  # block pose in the gripper frame
    return (rel,)


def sample_grasp(values, ctx: BindContext, rng):
    (o,) = values
    phi = (0.0, 0.5 * math.pi, math.pi, -0.5 * math.pi)[int(rng.integers(4))]
    return (Pose2(0.0, 0.0, phi),)


def sample_pose(values, ctx: BindContext, rng):
    o, region = values
    cx, cy, half = region
    margin = half - config.BLOCK_HALF - 0.01
    blocks = ctx.poses_array()
    skip = {ctx.index(o)}
    for _ in range(30):
        x = cx + float(rng.uniform(-margin, margin))
        y = cy + float(rng.uniform(-margin, margin))
        pose = Pose2(x, y, float(rng.uniform(-math.pi, math.pi)))
        if block_pose_free(blocks, pose, ignore=skip):
            return (pose,)
    return None


_L1, _L2, _L3 = config.LINK_LENGTHS
_WRIST_MAX = _L1 + _L2 - 0.02
_WRIST_MIN = abs(_L1 - _L2) + 0.02


def _wrist_targets(o_block, p: Pose2, goal):
    """Wrist points the arm must reach to work the object at p (and, for a
    pushable object, to finish the push at its goal)."""
    if o_block.alignable and goal is not None:
        grip = aligned_gripper_pose(p, goal)
        if grip is None:
            return None
        c, s = math.cos(grip.theta), math.sin(grip.theta)
        w1 = (grip.x - _L3 * c, grip.y - _L3 * s)
        w2 = (w1[0] + goal.x - p.x, w1[1] + goal.y - p.y)
        return [w1, w2]
    targets = [(p.x, p.y)]
    if goal is not None:
        targets.append((goal.x, goal.y))
    return targets


def sample_base_conf(values, ctx: BindContext, rng):
    """Base poses from which the object's pose (and its goal, when known)
    stay within arm reach: sampled around the midpoint of the wrist
    targets, then screened for reach, table overlap, and block clearance."""
    o, p = values
    goal = ctx.goal_of(o)
    blocks = ctx.poses_array()
    block = ctx.scene.blocks[ctx.index(o)]
    targets = _wrist_targets(block, p, goal)
    if targets is None:
        return None
    # bounding box of the reach-disc intersection around the wrist targets
    lo_x = max(t[0] for t in targets) - _WRIST_MAX
    hi_x = min(t[0] for t in targets) + _WRIST_MAX
    lo_y = max(t[1] for t in targets) - _WRIST_MAX
    hi_y = min(t[1] for t in targets) + _WRIST_MAX
    if lo_x >= hi_x or lo_y >= hi_y:
        return None  # push longer than any single base placement can cover
    pushable = block.alignable and goal is not None
    for _ in range(80):
        x = float(rng.uniform(lo_x, hi_x))
        y = float(rng.uniform(lo_y, hi_y))
        ok = True
        for t in targets:
            d = math.hypot(x - t[0], y - t[1])
            if d > _WRIST_MAX or d < _WRIST_MIN:
                ok = False
                break
        if not ok:
            continue
        if pushable:
            # a base sitting on the push line makes mid-push wrists unreachable
            (ax, ay), (bx, by) = targets[0], targets[1]
            if seg_point_dist(ax, ay, bx, by, x, y) < 0.10:
                continue
        if not base_position_free(blocks, x, y):
            continue
        heading = math.atan2(p.y - y, p.x - x) + float(rng.normal(0.0, 0.3))
        return (Pose2(x, y, heading),)
    return None


def _approach_path(base: Pose2, q_goal, collision_q, rng):
    """Arm path from the tucked rest configuration to q_goal."""
    if not collision_q(REST) or not collision_q(q_goal):
        return None
    return rrt_connect(
        REST,
        q_goal,
        collision_q,
        _ARM_BOUNDS,
        step_size=config.APPROACH_RESOLUTION,
        max_iters=600,
        rng=rng,
    )


def inverse_kinematics_stream(values, ctx: BindContext, rng):
    """IK plus reaching trajectory for a grasp; the certified fact serves
    pick and place, so the path is checked both empty-handed and carrying."""
    a, o, p, g, q_base = values
    idx = ctx.index(o)
    blocks = ctx.poses_array()
    ee_target = p.compose(g.inverse())
    q_goal = inverse_kinematics(q_base, ee_target)
    if q_goal is None:
        return None
    if not block_pose_free(blocks, p, ignore={idx}):
        return None  # placement would overlap another block

    def collision_q(q):
        if not collision_free(blocks, q_base, q, ignore=(idx,)):
            return False
        carried = forward_kinematics(q_base, q).compose(g)
        return carried_block_free(blocks, carried, ignore=(idx,))

    path = _approach_path(q_base, q_goal, collision_q, rng)
    if path is None:
        return None
    return (path,)


def plan_base_motion(values, ctx: BindContext, rng):
    q1, q2 = values
    blocks = ctx.poses_array()

    def free_xy(xy):
        return base_position_free(blocks, float(xy[0]), float(xy[1]))

    path = rrt_connect(
        np.array([q1.x, q1.y]),
        np.array([q2.x, q2.y]),
        free_xy,
        _BASE_BOUNDS,
        step_size=config.BASE_RESOLUTION,
        max_iters=1500,
        rng=rng,
        extend_step=0.15,
    )
    if path is None:
        return None
    # blend heading along accumulated distance
    gaps = np.linalg.norm(np.diff(path, axis=0), axis=1)
    frac = np.concatenate([[0.0], np.cumsum(gaps)])
    total = frac[-1] if frac[-1] > 0 else 1.0
    frac /= total
    dth = math.remainder(q2.theta - q1.theta, 2.0 * math.pi)
    out = np.empty((path.shape[0], 3))
    out[:, :2] = path
    out[:, 2] = q1.theta + frac * dth
    out[0, 2] = q1.theta
    out[-1, 2] = q2.theta
    return (out,)


def plan_align_motion(values, ctx: BindContext, rng):
    """IK for the aligned gripper pose plus the reaching trajectory."""
    a, o, p1, p2, g, q0 = values
    idx = ctx.index(o)
    blocks = ctx.poses_array()
    if not block_pose_free(blocks, p2, ignore={idx}):
        return None  # push target pose unsafe
    grip = p1.compose(g.inverse())
    q2 = inverse_kinematics(q0, grip)
    if q2 is None:
        return None

    def collision_q(q):
        return collision_free(blocks, q0, q, ignore=(idx,))

    path = _approach_path(q0, q2, collision_q, rng)
    if path is None:
        return None
    return (q2, path)


def plan_push_motion(values, ctx: BindContext, rng):
    """Straight-line push trajectory: the gripper tracks the segment from
    the aligned pose to the goal-contact pose (the gripper pose with the
    block rigidly attached at its goal), heading fixed, each waypoint
    solved by IK and collision-checked with the block along for the ride."""
    a, o, p1, p2, g, q_base, q_arm = values
    idx = ctx.index(o)
    blocks = ctx.poses_array()
    start = p1.compose(g.inverse())
    dx, dy = p2.x - p1.x, p2.y - p1.y
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        return None
    steps = max(1, int(math.ceil(dist / 0.006)))
    qs = np.empty((steps + 1, 3))
    qs[0] = q_arm
    if np.max(np.abs(forward_kinematics(q_base, q_arm).to_array() - start.to_array())) > 1e-6:
        return None
    for k in range(1, steps + 1):
        t = k / steps
        target = Pose2(start.x + t * dx, start.y + t * dy, start.theta)
        q = inverse_kinematics(q_base, target)
        if q is None:
            return None
        if np.max(np.abs(q - qs[k - 1])) > config.MAX_JOINT_DELTA:
            return None  # branch flip or singularity
        block_at = Pose2(p1.x + t * dx, p1.y + t * dy, p1.theta)
        if not collision_free(blocks, q_base, q, moved=(idx, block_at)):
            return None
        qs[k] = q
    return (qs,)


SAMPLERS = {
    "sample-pose": sample_pose,
    "sample-grasp": sample_grasp,
    "sample-base-conf": sample_base_conf,
    "inverse-kinematics": inverse_kinematics_stream,
    "plan-base-motion": plan_base_motion,
    "plan-align-motion": plan_align_motion,
    "sample-align": sample_align,
    "plan-push-motion": plan_push_motion,
}

# How many successful bindings each stream instance may contribute;
# deterministic streams gain nothing from re-querying.
MAX_BINDINGS = {
    "sample-pose": 4,
    "sample-grasp": 2,
    "sample-base-conf": 100,
    "inverse-kinematics": 1,
    "plan-base-motion": 1,
    "plan-align-motion": 1,
    "sample-align": 1,
    "plan-push-motion": 1,
}


def interpolate_approach(path, resolution=config.APPROACH_RESOLUTION):
    """Dense form of a sparse arm path (used by re-validation checks)."""
    if path.shape[0] == 1:
        return path.copy()
    segs = [
        interpolate_joint(path[i], path[i + 1], resolution)[:-1]
        for i in range(path.shape[0] - 1)
    ]
    segs.append(path[-1:None])
    return np.vstack(segs)
