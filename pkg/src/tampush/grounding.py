"""Grounding of lifted action schemas over a fact set.

Instantiation joins each schema's positive preconditions against a
delete-relaxed reachable fact set (semi-naive fixpoint), which yields
exactly the parameter instantiations whose static preconditions hold in
init plus extra facts and whose fluent preconditions are reachable under
the delete relaxation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .pddl import DomainDef, TaskProblem, is_variable


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple
    pre_pos: frozenset
    pre_neg: frozenset
    add: frozenset
    delete: frozenset
    cost: float = 1.0

    def __post_init__(self):
        overlap = self.add & self.delete
        if overlap:
            raise ValueError(f"add/delete overlap in {self.signature}: {overlap}")

    @property
    def signature(self) -> str:
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(str(a) for a in self.args)})"


def _join(atoms, binding, facts_by_pred, out):
    """Backtracking join of positive atoms against indexed facts.

    At each step the atom with the fewest candidate facts expands first;
    its pattern is compiled against the current binding (bound variables
    become constant tests) before the fact scan, which keeps the inner
    loop to plain tuple indexing.
    """
    if not atoms:
        out.append(dict(binding))
        return
    best_i = min(
        range(len(atoms)),
        key=lambda i: len(facts_by_pred.get(atoms[i].predicate, ())),
    )
    atom = atoms[best_i]
    rest = atoms[:best_i] + atoms[best_i + 1 :]
    consts = []
    free = []
    for i, a in enumerate(atom.args):
        if is_variable(a):
            b = binding.get(a)
            if b is None:
                free.append((i, a))
            else:
                consts.append((i, b))
        else:
            consts.append((i, a))
    n_args = len(atom.args)
    for fact in facts_by_pred.get(atom.predicate, ()):
        fargs = fact.args
        if len(fargs) != n_args:
            continue
        ok = True
        for i, v in consts:
            if fargs[i] != v:
                ok = False
                break
        if not ok:
            continue
        local = {}
        for i, name in free:
            seen = local.get(name)
            if seen is None:
                local[name] = fargs[i]
            elif seen != fargs[i]:
                ok = False
                break
        if not ok:
            continue
        binding.update(local)
        _join(rest, binding, facts_by_pred, out)
        for k in local:
            del binding[k]


def _instantiate(schema, binding, objects, function_values):
    """Ground actions for one binding, enumerating any free parameters.

    Instantiations whose add and delete sets overlap (e.g. a move from a
    configuration to itself) violate the ground-action invariant and are
    skipped: they are no-ops at best.
    """
    free = [p for p in schema.parameters if p not in binding]
    for combo in itertools.product(objects, repeat=len(free)):
        b = dict(binding)
        b.update(zip(free, combo))
        add = frozenset(a.substitute(b) for a in schema.add)
        delete = frozenset(a.substitute(b) for a in schema.delete)
        if add & delete:
            continue
        yield GroundAction(
            name=schema.name,
            args=tuple(b[p] for p in schema.parameters),
            pre_pos=frozenset(
                lit.atom.substitute(b) for lit in schema.precondition if lit.positive
            ),
            pre_neg=frozenset(
                lit.atom.substitute(b) for lit in schema.precondition if not lit.positive
            ),
            add=add,
            delete=delete,
            cost=function_values.get(schema.cost_fn, 1.0) if schema.cost_fn else 1.0,
        )


def ground(domain: DomainDef, problem: TaskProblem, extra_facts=()):
    """All reachable ground instances of the domain's actions.

    extra_facts: additional ground atoms (e.g. stream-certified facts)
    treated as part of the initial state.  Returns a deterministically
    ordered list of GroundAction.
    """
    facts = set(problem.init) | set(extra_facts)
    facts_by_pred: dict[str, list] = {}
    for f in sorted(facts, key=str):
        facts_by_pred.setdefault(f.predicate, []).append(f)

    # objects mentioned anywhere, for parameters unconstrained by preconditions
    objects = set(problem.objects)
    for f in facts:
        objects.update(a for a in f.args if isinstance(a, str))
    objects = sorted(objects)

    actions: dict[tuple, GroundAction] = {}
    changed = True
    while changed:
        changed = False
        for schema in domain.actions:
            pos = [lit.atom for lit in schema.precondition if lit.positive]
            bindings: list[dict] = []
            _join(pos, {}, facts_by_pred, bindings)
            for b in bindings:
                for ga in _instantiate(schema, b, objects, problem.function_values):
                    key = (ga.name, ga.args)
                    if key in actions:
                        continue
                    actions[key] = ga
                    for atom in ga.add:
                        if atom not in facts:
                            facts.add(atom)
                            facts_by_pred.setdefault(atom.predicate, []).append(atom)
                            changed = True
    out = list(actions.values())
    out.sort(key=lambda a: (a.name, tuple(str(x) for x in a.args)))
    return out
