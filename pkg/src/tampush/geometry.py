"""Planar geometry primitives: poses, oriented rectangles, segment distances.

The scalar kernels at the bottom are the innermost loops of collision
checking and simulation; they carry ``@jit`` (see :mod:`tampush.accel`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accel import jit

TWO_PI = 2.0 * math.pi


@jit
def wrap_angle(theta):
    """Normalize an angle to (-pi, pi]."""
    out = math.pi - (math.pi - theta) % TWO_PI
    if out <= -math.pi:
        out += TWO_PI
    return out


@dataclass(frozen=True)
class Pose2:
    """A planar pose (x, y, theta), theta normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def compose(self, other: "Pose2") -> "Pose2":
        """self * other: apply other in self's frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return self.x + c * px - s * py, self.y + s * px + c * py

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @staticmethod
    def from_array(a) -> "Pose2":
        return Pose2(float(a[0]), float(a[1]), float(a[2]))


def pose_distance(a: Pose2, b: Pose2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


# -- scalar kernels ----------------------------------------------------------
#
# All take plain floats / contiguous float64 arrays so they compile under
# numba and stay usable as-is when acceleration is disabled.


@jit
def rect_corners(cx, cy, theta, hx, hy):
    """Corners of an oriented rectangle, CCW, as a 4x2 array."""
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty((4, 2))
    out[0, 0] = cx + c * hx - s * hy
    out[0, 1] = cy + s * hx + c * hy
    out[1, 0] = cx - c * hx - s * hy
    out[1, 1] = cy - s * hx + c * hy
    out[2, 0] = cx - c * hx + s * hy
    out[2, 1] = cy - s * hx - c * hy
    out[3, 0] = cx + c * hx + s * hy
    out[3, 1] = cy + s * hx - c * hy
    return out


@jit
def point_rect_dist(px, py, cx, cy, theta, hx, hy):
    """Distance from a point to an oriented rectangle (0 if inside)."""
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = px - cx, py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    ex = abs(lx) - hx
    ey = abs(ly) - hy
    if ex <= 0.0 and ey <= 0.0:
        return 0.0
    if ex < 0.0:
        ex = 0.0
    if ey < 0.0:
        ey = 0.0
    return math.sqrt(ex * ex + ey * ey)


@jit
def point_in_rect(px, py, cx, cy, theta, hx, hy):
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = px - cx, py - cy
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return abs(lx) <= hx and abs(ly) <= hy


@jit
def seg_point_dist(ax, ay, bx, by, px, py):
    """Distance from point p to segment ab."""
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = vx * vx + vy * vy
    if vv <= 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / vv
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = wx - t * vx
    dy = wy - t * vy
    return math.hypot(dx, dy)


@jit
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


@jit
def _on_segment(ax, ay, bx, by, px, py):
    return (
        min(ax, bx) <= px <= max(ax, bx)
        and min(ay, by) <= py <= max(ay, by)
    )


@jit
def segs_intersect(ax, ay, bx, by, cx, cy, dx, dy):
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    return False


@jit
def seg_seg_dist(ax, ay, bx, by, cx, cy, dx, dy):
    """Distance between segments ab and cd (0 if they intersect)."""
    if segs_intersect(ax, ay, bx, by, cx, cy, dx, dy):
        return 0.0
    d1 = seg_point_dist(ax, ay, bx, by, cx, cy)
    d2 = seg_point_dist(ax, ay, bx, by, dx, dy)
    d3 = seg_point_dist(cx, cy, dx, dy, ax, ay)
    d4 = seg_point_dist(cx, cy, dx, dy, bx, by)
    return min(min(d1, d2), min(d3, d4))


@jit
def seg_rect_dist(ax, ay, bx, by, cx, cy, theta, hx, hy):
    """Distance from segment ab to an oriented rectangle (0 on overlap)."""
    if point_in_rect(ax, ay, cx, cy, theta, hx, hy):
        return 0.0
    if point_in_rect(bx, by, cx, cy, theta, hx, hy):
        return 0.0
    corners = rect_corners(cx, cy, theta, hx, hy)
    best = 1e30
    for i in range(4):
        j = (i + 1) % 4
        d = seg_seg_dist(
            ax, ay, bx, by, corners[i, 0], corners[i, 1], corners[j, 0], corners[j, 1]
        )
        if d < best:
            best = d
        if best == 0.0:
            return 0.0
    return best


@jit
def rects_collide(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy):
    """Separating-axis overlap test for two oriented rectangles.

    Touching boundaries (zero penetration) do not count as a collision.
    """
    ca = rect_corners(ax, ay, atheta, ahx, ahy)
    cb = rect_corners(bx, by, btheta, bhx, bhy)
    for k in range(4):
        if k == 0:
            nx, ny = math.cos(atheta), math.sin(atheta)
        elif k == 1:
            nx, ny = -math.sin(atheta), math.cos(atheta)
        elif k == 2:
            nx, ny = math.cos(btheta), math.sin(btheta)
        else:
            nx, ny = -math.sin(btheta), math.cos(btheta)
        amin = 1e30
        amax = -1e30
        bmin = 1e30
        bmax = -1e30
        for i in range(4):
            pa = ca[i, 0] * nx + ca[i, 1] * ny
            pb = cb[i, 0] * nx + cb[i, 1] * ny
            if pa < amin:
                amin = pa
            if pa > amax:
                amax = pa
            if pb < bmin:
                bmin = pb
            if pb > bmax:
                bmax = pb
        if amax <= bmin or bmax <= amin:
            return False
    return True


@jit
def rect_rect_dist(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy):
    """Distance between two oriented rectangles (0 on overlap/touch)."""
    if rects_collide(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy):
        return 0.0
    ca = rect_corners(ax, ay, atheta, ahx, ahy)
    best = 1e30
    for i in range(4):
        j = (i + 1) % 4
        d = seg_rect_dist(
            ca[i, 0], ca[i, 1], ca[j, 0], ca[j, 1], bx, by, btheta, bhx, bhy
        )
        if d < best:
            best = d
    return best
