"""Forward state-space search over ground actions.

Greedy best-first search on the additive heuristic with FIFO tie-breaking;
negated preconditions are evaluated closed-world against the state set.
Deterministic for identical inputs.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Plan:
    steps: tuple
    total_cost: float

    def __len__(self):
        return len(self.steps)


@dataclass
class SearchOutcome:
    status: str  # "plan" | "timeout" | "unsolvable"
    plan: Plan | None = None
    expanded: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "plan"


class _Interner:
    def __init__(self):
        self.ids = {}

    def __call__(self, atom) -> int:
        i = self.ids.get(atom)
        if i is None:
            i = len(self.ids)
            self.ids[atom] = i
        return i


@dataclass
class _IntAction:
    index: int
    pre: tuple
    neg: tuple
    add: tuple
    delete: tuple
    cost: float
    ref: object = field(repr=False, default=None)


def _intern_all(init, goal, actions):
    intern = _Interner()
    init_ids = frozenset(intern(a) for a in init)
    goal_ids = frozenset(intern(a) for a in goal)
    int_actions = [
        _IntAction(
            index=i,
            pre=tuple(intern(a) for a in act.pre_pos),
            neg=tuple(intern(a) for a in act.pre_neg),
            add=tuple(intern(a) for a in act.add),
            delete=tuple(intern(a) for a in act.delete),
            cost=act.cost,
            ref=act,
        )
        for i, act in enumerate(actions)
    ]
    return init_ids, goal_ids, int_actions


def _hadd(state_ids, goal_ids, int_actions) -> float:
    h = {a: 0.0 for a in state_ids}
    changed = True
    while changed:
        changed = False
        for act in int_actions:
            total = act.cost
            ok = True
            for p in act.pre:
                hp = h.get(p)
                if hp is None:
                    ok = False
                    break
                total += hp
            if not ok:
                continue
            for a in act.add:
                if total < h.get(a, math.inf):
                    h[a] = total
                    changed = True
    value = 0.0
    for g in goal_ids:
        hg = h.get(g)
        if hg is None:
            return math.inf
        value += hg
    return value


def h_add(state, goal, ground_actions) -> float:
    """Additive heuristic; 0 iff goal satisfied, inf iff relaxed-unreachable."""
    init_ids, goal_ids, int_actions = _intern_all(state, goal, ground_actions)
    return _hadd(init_ids, goal_ids, int_actions)


def plan_task(init, goal, ground_actions, budget: float = 30.0) -> SearchOutcome:
    """Greedy best-first search; returns a plan, timeout, or unsolvable."""
    assert budget > 0
    deadline = time.monotonic() + budget
    init_ids, goal_ids, int_actions = _intern_all(init, goal, ground_actions)

    start = frozenset(init_ids)
    h0 = _hadd(start, goal_ids, int_actions)
    if math.isinf(h0):
        return SearchOutcome("unsolvable")
    parents = {start: None}
    heap = [(h0, 0, start)]
    seq = 1
    expanded = 0
    while heap:
        if time.monotonic() > deadline:
            return SearchOutcome("timeout", expanded=expanded)
        _, _, state = heapq.heappop(heap)
        expanded += 1
        if goal_ids <= state:
            steps = []
            cur = state
            while parents[cur] is not None:
                prev, act = parents[cur]
                steps.append(act.ref)
                cur = prev
            steps.reverse()
            return SearchOutcome(
                "plan",
                Plan(tuple(steps), sum(a.cost for a in steps)),
                expanded,
            )
        for act in int_actions:
            if not all(p in state for p in act.pre):
                continue
            if any(n in state for n in act.neg):
                continue
            nxt = frozenset((state - frozenset(act.delete)) | frozenset(act.add))
            if nxt in parents:
                continue
            parents[nxt] = (state, act)
            h = _hadd(nxt, goal_ids, int_actions)
            if math.isinf(h):
                continue
            heapq.heappush(heap, (h, seq, nxt))
            seq += 1
    return SearchOutcome("unsolvable", expanded=expanded)


def validate_plan(init, goal, plan: Plan):
    """Simulate the plan; (True, -1) or (False, first failing step index).

    A plan whose steps all apply but whose end state misses the goal fails
    with index len(steps).
    """
    state = set(init)
    for i, act in enumerate(plan.steps):
        if not act.pre_pos <= state or act.pre_neg & state:
            return False, i
        state -= act.delete
        state |= act.add
    if not set(goal) <= state:
        return False, len(plan.steps)
    return True, -1


def bfs_optimal_length(init, goal, ground_actions, max_states: int = 100_000):
    """Breadth-first optimal plan length in steps; None if not found.

    Independent of the greedy search: used as an oracle for plan-length
    checks on small instances.
    """
    init_ids, goal_ids, int_actions = _intern_all(init, goal, ground_actions)
    start = frozenset(init_ids)
    if goal_ids <= start:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        state, depth = queue.popleft()
        for act in int_actions:
            if not all(p in state for p in act.pre):
                continue
            if any(n in state for n in act.neg):
                continue
            nxt = frozenset((state - frozenset(act.delete)) | frozenset(act.add))
            if nxt in seen:
                continue
            if goal_ids <= nxt:
                return depth + 1
            seen.add(nxt)
            if len(seen) > max_states:
                return None
            queue.append((nxt, depth + 1))
    return None


def plan_to_text(plan: Plan) -> str:
    lines = [f"{act.signature} [{act.cost:g}]" for act in plan.steps]
    return "\n".join(lines) + ("\n" if lines else "")
