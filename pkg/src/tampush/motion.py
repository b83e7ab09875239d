"""Joint-space interpolation and bidirectional RRT.

The planner is dimension-agnostic: the base motion planner runs it in 2-D
(x, y) and the arm planner in 3-D joint space.  Collision callbacks decide
validity; determinism holds per rng seed.
"""

from __future__ import annotations

import math

import numpy as np


def interpolate_joint(q_start, q_goal, resolution: float) -> np.ndarray:
    """Linear per-joint interpolation with per-step change <= resolution.

    Endpoints are exact; a zero-length move yields a single waypoint.
    """
    q_start = np.asarray(q_start, dtype=float)
    q_goal = np.asarray(q_goal, dtype=float)
    span = float(np.max(np.abs(q_goal - q_start)))
    if span == 0.0:
        return q_start[None, :].copy()
    steps = int(math.ceil(span / resolution - 1e-12))
    ts = np.linspace(0.0, 1.0, steps + 1)
    path = q_start[None, :] + ts[:, None] * (q_goal - q_start)[None, :]
    path[0] = q_start
    path[-1] = q_goal
    return path


def _edge_free(a, b, collision_fn, resolution) -> bool:
    for q in interpolate_joint(a, b, resolution):
        if not collision_fn(q):
            return False
    return True


def _steer(a, b, step):
    d = np.linalg.norm(b - a)
    if d <= step:
        return b
    return a + (b - a) * (step / d)


def _nearest(nodes, count, q):
    d = np.sum((nodes[:count] - q) ** 2, axis=1)
    return int(np.argmin(d))


def _extract(nodes, parents, idx):
    out = []
    while idx >= 0:
        out.append(nodes[idx].copy())
        idx = parents[idx]
    out.reverse()
    return out


def shortcut(path, collision_fn, resolution, rng, iters=30):
    """Random shortcutting pass; keeps endpoints, stays collision-free."""
    path = [np.asarray(p, dtype=float) for p in path]
    for _ in range(iters):
        if len(path) <= 2:
            break
        i = int(rng.integers(0, len(path) - 1))
        j = int(rng.integers(0, len(path) - 1))
        if abs(i - j) < 2:
            continue
        i, j = min(i, j), max(i, j)
        if _edge_free(path[i], path[j], collision_fn, resolution):
            path = path[: i + 1] + path[j:]
    return np.array(path)


def rrt_connect(
    start,
    goal,
    collision_fn,
    bounds,
    step_size: float,
    max_iters: int = 2000,
    rng=None,
    extend_step: float | None = None,
    smooth_iters: int = 30,
):
    """Bidirectional RRT between start and goal.

    bounds: (low, high) arrays for uniform sampling.
    Returns an (k, dim) waypoint array whose step_size-resolution
    interpolation is collision-free, or None after max_iters.
    """
    rng = np.random.default_rng() if rng is None else rng
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if not collision_fn(start) or not collision_fn(goal):
        return None
    if np.array_equal(start, goal):
        return start[None, :].copy()
    if _edge_free(start, goal, collision_fn, step_size):
        return np.array([start, goal])

    low, high = (np.asarray(b, dtype=float) for b in bounds)
    dim = start.shape[0]
    if extend_step is None:
        extend_step = 4.0 * step_size
    cap = max_iters + 2
    nodes_a = np.empty((cap, dim))
    nodes_b = np.empty((cap, dim))
    par_a = np.full(cap, -1, dtype=np.int64)
    par_b = np.full(cap, -1, dtype=np.int64)
    nodes_a[0] = start
    nodes_b[0] = goal
    na, nb = 1, 1
    a_is_start = True

    for _ in range(max_iters):
        sample = rng.uniform(low, high)
        # extend tree A toward the sample
        i = _nearest(nodes_a, na, sample)
        q_new = _steer(nodes_a[i], sample, extend_step)
        if not _edge_free(nodes_a[i], q_new, collision_fn, step_size):
            nodes_a, nodes_b = nodes_b, nodes_a
            par_a, par_b = par_b, par_a
            na, nb = nb, na
            a_is_start = not a_is_start
            continue
        nodes_a[na] = q_new
        par_a[na] = i
        na += 1
        # greedily connect tree B to the new node
        j = _nearest(nodes_b, nb, q_new)
        q_cur = nodes_b[j]
        while True:
            q_next = _steer(q_cur, q_new, extend_step)
            if not _edge_free(q_cur, q_next, collision_fn, step_size):
                break
            nodes_b[nb] = q_next
            par_b[nb] = j
            j = nb
            nb += 1
            q_cur = q_next
            if np.array_equal(q_cur, q_new):
                seg_a = _extract(nodes_a, par_a, na - 1)
                seg_b = _extract(nodes_b, par_b, j)
                if a_is_start:
                    path = seg_a + seg_b[-2::-1]
                else:
                    path = seg_b + seg_a[-2::-1]
                path = np.array(path)
                if smooth_iters:
                    path = shortcut(path, collision_fn, step_size, rng, smooth_iters)
                return path
            if nb >= cap or na >= cap:
                return None
        nodes_a, nodes_b = nodes_b, nodes_a
        par_a, par_b = par_b, par_a
        na, nb = nb, na
        a_is_start = not a_is_start
        if na >= cap or nb >= cap:
            return None
    return None
