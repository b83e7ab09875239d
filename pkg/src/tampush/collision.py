"""Collision checking for the planar world.

Colliders: 3 link capsules, the base disc, and (optionally) one moved block
polygon, tested against the static block polygons, the workspace walls and
each other.  The table itself is not an obstacle for the robot (the base
slides under the table top, the arm reaches over it); the table edge only
contains block polygons, and the base center must stay off the table.
"""

from __future__ import annotations

import numpy as np

from . import config
from .accel import jit
from .geometry import (
    Pose2,
    point_in_rect,
    point_rect_dist,
    rect_rect_dist,
    rects_collide,
    seg_rect_dist,
)
from .kinematics import arm_points

_WS = config.WORKSPACE_HALF
_TH = config.TABLE_HALF
_BH = config.BLOCK_HALF
_BASE_R = config.BASE_RADIUS
_CAP_R = config.CAPSULE_RADIUS


@jit
def block_on_table(cx, cy, theta):
    """True if the whole block polygon lies on the table (rim containment)."""
    c = np.cos(theta)
    s = np.sin(theta)
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            px = cx + c * sx * _BH - s * sy * _BH
            py = cy + s * sx * _BH + c * sy * _BH
            if abs(px) > _TH or abs(py) > _TH:
                return False
    return True


@jit
def _config_collides(bx, by, btheta, q1, q2, q3, blocks, active, has_moved, mx, my, mth):
    pts = arm_points(bx, by, btheta, q1, q2, q3)
    n = blocks.shape[0]

    # base disc: inside workspace, center off the table, clear of blocks
    if abs(bx) + _BASE_R > _WS or abs(by) + _BASE_R > _WS:
        return True
    if point_in_rect(bx, by, 0.0, 0.0, 0.0, _TH, _TH):
        return True
    for i in range(n):
        if not active[i]:
            continue
        if point_rect_dist(bx, by, blocks[i, 0], blocks[i, 1], blocks[i, 2], _BH, _BH) < _BASE_R:
            return True

    # link capsules: workspace bounds and static blocks (links fold over
    # one another at staggered heights, so no link-vs-link test)
    for k in range(3):
        ax, ay = pts[k, 0], pts[k, 1]
        ex, ey = pts[k + 1, 0], pts[k + 1, 1]
        if (
            max(abs(ax), abs(ex)) + _CAP_R > _WS
            or max(abs(ay), abs(ey)) + _CAP_R > _WS
        ):
            return True
        for i in range(n):
            if not active[i]:
                continue
            d = seg_rect_dist(ax, ay, ex, ey, blocks[i, 0], blocks[i, 1], blocks[i, 2], _BH, _BH)
            if d < _CAP_R:
                return True

    # moved block polygon: rim containment, static blocks, base disc
    if has_moved:
        if not block_on_table(mx, my, mth):
            return True
        for i in range(n):
            if not active[i]:
                continue
            if rects_collide(mx, my, mth, _BH, _BH,
                             blocks[i, 0], blocks[i, 1], blocks[i, 2], _BH, _BH):
                return True
        if point_rect_dist(bx, by, mx, my, mth, _BH, _BH) < _BASE_R:
            return True
    return False


def collision_free(block_poses: np.ndarray, base: Pose2, arm, moved=None, ignore=()) -> bool:
    """True iff the configuration is collision-free.

    block_poses: (n, 3) float64 array of static block poses.
    moved: optional (block index, Pose2) for a block moved with the gripper;
        that block is removed from the static set and checked at its pose.
        The link capsules are not tested against the moved block (it is in
        contact with the gripper by construction).
    ignore: block indices excluded entirely (the push target during align).
    """
    n = block_poses.shape[0]
    active = np.ones(n, dtype=np.bool_)
    for i in ignore:
        active[i] = False
    has_moved = moved is not None
    if has_moved:
        idx, pose = moved
        active[idx] = False
        mx, my, mth = pose.x, pose.y, pose.theta
    else:
        mx = my = mth = 0.0
    return not _config_collides(
        base.x, base.y, base.theta, float(arm[0]), float(arm[1]), float(arm[2]),
        block_poses, active, has_moved, mx, my, mth,
    )


def base_position_free(block_poses: np.ndarray, x: float, y: float, ignore=()) -> bool:
    """Validity of a base position alone (used by the base motion planner)."""
    if abs(x) + _BASE_R > _WS or abs(y) + _BASE_R > _WS:
        return False
    if point_in_rect(x, y, 0.0, 0.0, 0.0, _TH, _TH):
        return False
    for i in range(block_poses.shape[0]):
        if i in ignore:
            continue
        d = point_rect_dist(x, y, block_poses[i, 0], block_poses[i, 1], block_poses[i, 2], _BH, _BH)
        if d < _BASE_R:
            return False
    return True


def block_pose_free(block_poses: np.ndarray, pose: Pose2, ignore=()) -> bool:
    """True iff a block at ``pose`` sits on the table clear of other blocks."""
    if not block_on_table(pose.x, pose.y, pose.theta):
        return False
    for i in range(block_poses.shape[0]):
        if i in ignore:
            continue
        if rects_collide(pose.x, pose.y, pose.theta, _BH, _BH,
                         block_poses[i, 0], block_poses[i, 1], block_poses[i, 2], _BH, _BH):
            return False
    return True


def carried_block_free(block_poses: np.ndarray, pose: Pose2, ignore=()) -> bool:
    """Carried-block clearance: other blocks and workspace only.

    A block in the gripper is lifted, so the table rim containment does not
    apply while it is carried.
    """
    if abs(pose.x) + rim_slack() > _WS or abs(pose.y) + rim_slack() > _WS:
        return False
    for i in range(block_poses.shape[0]):
        if i in ignore:
            continue
        if rects_collide(pose.x, pose.y, pose.theta, _BH, _BH,
                         block_poses[i, 0], block_poses[i, 1], block_poses[i, 2], _BH, _BH):
            return False
    return True


def rim_slack() -> float:
    return _BH * 1.4143
