"""Optimistic stream instantiation, plan-guided binding, and the budgeted
solve loop that ties task planning to the geometric samplers.

The loop is a level-increasing focused procedure: instantiate streams
optimistically up to the current level, ground and plan over the combined
fact set, then bind the plan's stream values in plan order by actually
sampling.  Sampler successes certify real facts (the certified set only
grows within a solve); failures count against a per-instance retry cap,
and exhausted instances drop out of the optimistic universe until every
option is spent, at which point all instances are re-enabled with fresh
sampler seeds and the loop continues until the wall-clock budget runs out.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import config
from .grounding import GroundAction, _join, ground
from .pddl import Atom, DomainDef, TaskProblem
from .planner import Plan, plan_task, validate_plan
from .samplers import MAX_BINDINGS, SAMPLERS, BindContext
from .scene import scene_from_problem, value_map_from_problem

PARKED = None  # sentinel pose for carried blocks (out of the obstacle set)


@dataclass
class StreamInstance:
    spec: object
    inputs: tuple
    serial: int
    level: int
    calls: int = 0
    failures: int = 0
    disabled: bool = False
    bindings: list = field(default_factory=list)

    @property
    def key(self):
        return (self.spec.name, self.inputs)

    def live_output_names(self):
        slot = len(self.bindings)
        return tuple(f"#{self.serial}s{slot}o{i}" for i in range(len(self.spec.outputs)))


@dataclass
class FailureInfo:
    stream: str
    inputs: tuple
    attempts: int


@dataclass
class BoundStep:
    name: str
    args: tuple

    @property
    def signature(self) -> str:
        return f"({self.name} {' '.join(self.args)})" if self.args else f"({self.name})"


@dataclass
class BoundPlan:
    steps: list
    total_cost: float
    values: dict
    certified: frozenset

    def __len__(self):
        return len(self.steps)

    def skill_names(self):
        return [s.name for s in self.steps]


@dataclass
class SolveStats:
    iterations: int = 0
    sampler_calls: int = 0
    bind_failures: int = 0
    elapsed: float = 0.0
    final_level: int = 0


@dataclass
class SolveResult:
    status: str  # "bound" | "timeout" | "unsolvable"
    plan: BoundPlan | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def ok(self) -> bool:
        return self.status == "bound"


class _BindFailure(Exception):
    def __init__(self, info: FailureInfo):
        self.info = info


class _BudgetExhausted(Exception):
    pass


def _child_rng(root_seed: int, key, calls: int):
    tag = zlib.crc32(f"{key[0]}|{'|'.join(map(str, key[1]))}".encode())
    return np.random.default_rng([root_seed & 0xFFFFFFFF, tag, calls])


class AdaptiveSolver:
    def __init__(self, domain, streams, problem, samplers=None, seed=0,
                 budget=config.SOLVE_BUDGET, retry_cap=config.RETRY_CAP,
                 level_cap=config.LEVEL_CAP, scene=None):
        self.domain = domain
        self.specs = list(streams)
        self.problem = problem
        self.samplers = dict(SAMPLERS if samplers is None else samplers)
        self.max_bindings = MAX_BINDINGS
        self.seed = seed
        self.budget = budget
        self.retry_cap = retry_cap
        self.level_cap = level_cap
        self.scene = scene_from_problem(problem) if scene is None else scene
        self.values = value_map_from_problem(problem)
        self.fact_store = set(problem.init)
        self.registry: dict[tuple, StreamInstance] = {}
        self.producers: dict[str, tuple] = {}
        self.bound_names: dict[str, str] = {}
        self._serial = 0
        self._value_counter = 0
        self.stats = SolveStats()

    # -- optimistic instantiation --------------------------------------------

    def _get_instance(self, spec, inputs, level) -> StreamInstance:
        key = (spec.name, inputs)
        inst = self.registry.get(key)
        if inst is None:
            inst = StreamInstance(spec, inputs, self._serial, level)
            self._serial += 1
            self.registry[key] = inst
        return inst

    def instantiate(self, max_level: int):
        """Optimistic certified facts up to max_level; real facts are level 0
        and instances may consume outputs produced at lower levels."""
        facts = set(self.fact_store)
        opt_facts = []
        self.producers.clear()
        for level in range(max_level + 1):
            facts_by_pred: dict[str, list] = {}
            for f in sorted(facts, key=str):
                facts_by_pred.setdefault(f.predicate, []).append(f)
            grew = False
            for spec in self.specs:
                bindings: list[dict] = []
                _join(list(spec.domain), {}, facts_by_pred, bindings)
                bindings.sort(key=lambda b: tuple(str(b[v]) for v in spec.inputs))
                for b in bindings:
                    inputs = tuple(b[v] for v in spec.inputs)
                    inst = self._get_instance(spec, inputs, level)
                    if inst.disabled or len(inst.bindings) >= self.max_bindings.get(spec.name, 1):
                        continue
                    names = inst.live_output_names()
                    sub = dict(zip(spec.inputs, inputs))
                    sub.update(zip(spec.outputs, names))
                    for nm in names:
                        self.producers[nm] = (inst, names)
                    for atom in spec.certified:
                        ground_atom = atom.substitute(sub)
                        if ground_atom not in facts:
                            facts.add(ground_atom)
                            opt_facts.append(ground_atom)
                            grew = True
            if len(opt_facts) > 4000:
                break  # safety valve against cross-product blowups
            if not grew and level > 0:
                break
        return opt_facts

    # -- binding ---------------------------------------------------------------

    def _fresh_names(self, count: int):
        names = tuple(f"v{self._value_counter + i}" for i in range(count))
        self._value_counter += count
        return names

    def _resolve(self, name, mapping, ctx, deadline):
        if not name.startswith("#") or name in mapping:
            return
        cached = self.bound_names.get(name)
        if cached is not None:
            mapping[name] = cached
            return
        inst, plan_names = self.producers[name]
        for inp in inst.inputs:
            self._resolve(inp, mapping, ctx, deadline)
        if time.monotonic() > deadline:
            raise _BudgetExhausted
        # constants without a geometric payload (object names) pass through
        input_values = tuple(
            self.values.get(mapping.get(i, i), mapping.get(i, i)) for i in inst.inputs
        )
        rng = _child_rng(self.seed, inst.key, inst.calls)
        inst.calls += 1
        self.stats.sampler_calls += 1
        result = self.samplers[inst.spec.name](input_values, ctx, rng)
        if result is None:
            inst.failures += 1
            if inst.failures % self.retry_cap == 0:
                inst.disabled = True
            raise _BindFailure(FailureInfo(inst.spec.name, inst.inputs, inst.failures))
        real = self._fresh_names(len(result))
        for nm, value in zip(real, result):
            self.values[nm] = value
        resolved_inputs = tuple(mapping.get(i, i) for i in inst.inputs)
        sub = dict(zip(inst.spec.inputs, resolved_inputs))
        sub.update(zip(inst.spec.outputs, real))
        for atom in inst.spec.certified:
            self.fact_store.add(atom.substitute(sub))
        inst.bindings.append(real)
        for opt_name, real_name in zip(plan_names, real):
            mapping[opt_name] = real_name
            self.bound_names[opt_name] = real_name

    def bind_plan(self, plan: Plan, deadline: float):
        """Sample every stream value the plan depends on, in plan order.

        Returns (bound steps, mapping) or raises _BindFailure carrying the
        failed instance.  The context tracks symbolic object poses step by
        step so collision tests see the world the action will face.
        """
        ctx = BindContext.initial(self.scene)
        mapping: dict[str, str] = {}
        bound_steps = []
        for step in plan.steps:
            for arg in step.args:
                self._resolve(arg, mapping, ctx, deadline)
            args = tuple(mapping.get(a, a) for a in step.args)
            bound_steps.append(BoundStep(step.name, args))
            for atom in step.delete:
                if atom.predicate == "atpose":
                    ctx.poses[atom.args[0]] = PARKED
            for atom in step.add:
                if atom.predicate == "atpose":
                    o, p = atom.args
                    ctx.poses[o] = self.values[mapping.get(p, p)]
        return bound_steps, mapping

    # -- the loop ----------------------------------------------------------------

    def solve(self) -> SolveResult:
        t0 = time.monotonic()
        deadline = t0 + self.budget
        level = 0
        while True:
            if time.monotonic() > deadline:
                return self._finish("timeout", None, t0, level)
            self.stats.iterations += 1
            opt_facts = self.instantiate(level)
            init = frozenset(self.fact_store) | frozenset(opt_facts)
            problem = TaskProblem(
                name=self.problem.name,
                domain_name=self.problem.domain_name,
                objects=self.problem.objects,
                init=frozenset(self.fact_store),
                goal=self.problem.goal,
                function_values=self.problem.function_values,
                minimize_cost=self.problem.minimize_cost,
            )
            actions = ground(self.domain, problem, extra_facts=opt_facts)
            remaining = max(0.05, deadline - time.monotonic())
            outcome = plan_task(init, self.problem.goal, actions, budget=min(remaining, 10.0))
            if outcome.status == "timeout":
                continue
            if outcome.status == "unsolvable":
                if level < self.level_cap:
                    level += 1
                    continue
                disabled = [i for i in self.registry.values() if i.disabled]
                if disabled:
                    for inst in disabled:
                        inst.disabled = False
                    continue
                return self._finish("unsolvable", None, t0, level)
            # retry the same plan's binding until it succeeds or an instance
            # drops out (no point re-grounding while nothing structural moved)
            while True:
                if time.monotonic() > deadline:
                    return self._finish("timeout", None, t0, level)
                try:
                    bound_steps, mapping = self.bind_plan(outcome.plan, deadline)
                except _BindFailure as fail:
                    self.stats.bind_failures += 1
                    key = (fail.info.stream, fail.info.inputs)
                    if self.registry[key].disabled:
                        break  # universe changed; replan
                    continue
                except _BudgetExhausted:
                    return self._finish("timeout", None, t0, level)
                bound = BoundPlan(
                    steps=bound_steps,
                    total_cost=outcome.plan.total_cost,
                    values=self.values,
                    certified=frozenset(self.fact_store - set(self.problem.init)),
                )
                self._check_bound(outcome.plan, mapping)
                return self._finish("bound", bound, t0, level)

    def _check_bound(self, plan: Plan, mapping):
        """A bound plan must re-validate with the certified facts added."""
        steps = []
        sub = dict(mapping)
        for act in plan.steps:
            steps.append(
                GroundAction(
                    name=act.name,
                    args=tuple(mapping.get(a, a) for a in act.args),
                    pre_pos=frozenset(a.substitute(sub) for a in act.pre_pos),
                    pre_neg=frozenset(a.substitute(sub) for a in act.pre_neg),
                    add=frozenset(a.substitute(sub) for a in act.add),
                    delete=frozenset(a.substitute(sub) for a in act.delete),
                    cost=act.cost,
                )
            )
        ok, idx = validate_plan(self.fact_store, self.problem.goal, Plan(tuple(steps), 0.0))
        if not ok:
            raise RuntimeError(f"bound plan failed re-validation at step {idx}")

    def _finish(self, status, plan, t0, level) -> SolveResult:
        self.stats.elapsed = time.monotonic() - t0
        self.stats.final_level = level
        return SolveResult(status=status, plan=plan, stats=self.stats)


def instantiate_streams(specs, certified_facts, level: int):
    """Stand-alone optimistic instantiation (level 0 = real constants only;
    level k may consume optimistic outputs produced at lower levels).

    Returns the instances discovered, keyed (stream name, inputs).
    """
    registry: dict[tuple, StreamInstance] = {}
    facts = set(certified_facts)
    serial = 0
    for lvl in range(level + 1):
        facts_by_pred: dict[str, list] = {}
        for f in sorted(facts, key=str):
            facts_by_pred.setdefault(f.predicate, []).append(f)
        grew = False
        for spec in specs:
            bindings: list[dict] = []
            _join(list(spec.domain), {}, facts_by_pred, bindings)
            bindings.sort(key=lambda b: tuple(str(b[v]) for v in spec.inputs))
            for b in bindings:
                inputs = tuple(b[v] for v in spec.inputs)
                key = (spec.name, inputs)
                inst = registry.get(key)
                if inst is None:
                    inst = StreamInstance(spec, inputs, serial, lvl)
                    serial += 1
                    registry[key] = inst
                names = inst.live_output_names()
                sub = dict(zip(spec.inputs, inputs))
                sub.update(zip(spec.outputs, names))
                for atom in spec.certified:
                    ground_atom = atom.substitute(sub)
                    if ground_atom not in facts:
                        facts.add(ground_atom)
                        grew = True
        if not grew and lvl > 0:
            break
    return registry


def solve_adaptive(domain, streams, problem, samplers=None, budget=config.SOLVE_BUDGET,
                   seed=0, retry_cap=config.RETRY_CAP, level_cap=config.LEVEL_CAP,
                   scene=None) -> SolveResult:
    """Solve one task instance under a wall-clock budget; deterministic per
    (inputs, seed)."""
    solver = AdaptiveSolver(
        domain, streams, problem, samplers=samplers, seed=seed,
        budget=budget, retry_cap=retry_cap, level_cap=level_cap, scene=scene,
    )
    return solver.solve()
