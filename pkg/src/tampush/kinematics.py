"""Forward and analytic inverse kinematics for the 3-link planar arm."""

from __future__ import annotations

import math

import numpy as np

from . import config
from .accel import jit
from .geometry import Pose2, wrap_angle

L1, L2, L3 = config.LINK_LENGTHS
JOINT_LIMIT = config.JOINT_LIMIT


@jit
def arm_points(bx, by, btheta, q1, q2, q3):
    """Joint positions (base, elbow1, elbow2, end-effector) as a 4x2 array."""
    out = np.empty((4, 2))
    out[0, 0] = bx
    out[0, 1] = by
    a = btheta + q1
    out[1, 0] = bx + L1 * math.cos(a)
    out[1, 1] = by + L1 * math.sin(a)
    a += q2
    out[2, 0] = out[1, 0] + L2 * math.cos(a)
    out[2, 1] = out[1, 1] + L2 * math.sin(a)
    a += q3
    out[3, 0] = out[2, 0] + L3 * math.cos(a)
    out[3, 1] = out[2, 1] + L3 * math.sin(a)
    return out


@jit
def fk_tuple(bx, by, btheta, q1, q2, q3):
    pts = arm_points(bx, by, btheta, q1, q2, q3)
    return pts[3, 0], pts[3, 1], wrap_angle(btheta + q1 + q2 + q3)


def forward_kinematics(base: Pose2, arm) -> Pose2:
    """End-effector pose in the world frame."""
    x, y, th = fk_tuple(base.x, base.y, base.theta, arm[0], arm[1], arm[2])
    return Pose2(x, y, th)


def within_limits(arm) -> bool:
    return all(abs(q) <= JOINT_LIMIT for q in arm)


def inverse_kinematics(base: Pose2, target: Pose2):
    """Joint angles reaching ``target``, or None if unreachable.

    Analytic 3R solution: the wrist point is placed L3 behind the target
    along its heading, the two-link subproblem is solved for the first two
    joints (elbow-up branch preferred, elbow-down as fallback) and the last
    joint closes the orientation.
    """
    # target in the base frame
    rel = base.inverse().compose(target)
    wx = rel.x - L3 * math.cos(rel.theta)
    wy = rel.y - L3 * math.sin(rel.theta)
    d2 = wx * wx + wy * wy
    d = math.sqrt(d2)
    if d > L1 + L2 + 1e-12 or d < abs(L1 - L2) - 1e-12:
        return None
    cos_q2 = (d2 - L1 * L1 - L2 * L2) / (2.0 * L1 * L2)
    cos_q2 = min(1.0, max(-1.0, cos_q2))
    q2_mag = math.acos(cos_q2)
    for q2 in (q2_mag, -q2_mag):  # elbow-up first
        q1 = math.atan2(wy, wx) - math.atan2(L2 * math.sin(q2), L1 + L2 * math.cos(q2))
        q1 = wrap_angle(q1)
        q3 = wrap_angle(rel.theta - q1 - q2)
        q = (q1, q2, q3)
        if within_limits(q):
            return np.array(q)
    return None
