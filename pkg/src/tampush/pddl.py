"""PDDL domain / problem / stream parsing and pretty-printing.

Untyped PDDL with predicate-encoded types, closed-world negated
preconditions, and an additive total-cost metric.  ``:requirements``
blocks are parsed and ignored.  Symbols are case-insensitive and
normalized to lower case; variables keep their ``?`` prefix.

Numeric literals are allowed as atom arguments (the problem fixtures use
them to attach pose/configuration values to symbolic constants).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "Atom",
    "Literal",
    "ActionSchema",
    "DomainDef",
    "StreamSpec",
    "TaskProblem",
    "ParseError",
    "parse_domain",
    "parse_problem",
    "parse_streams",
    "pretty_domain",
    "pretty_problem",
    "pretty_streams",
]


class ParseError(Exception):
    """Raised on malformed PDDL input; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def is_variable(term) -> bool:
    return isinstance(term, str) and term.startswith("?")


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    def is_ground(self) -> bool:
        return not any(is_variable(a) for a in self.args)

    def substitute(self, binding: dict) -> "Atom":
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))

    def variables(self):
        return {a for a in self.args if is_variable(a)}

    def __str__(self):
        if not self.args:
            return f"({self.predicate})"
        parts = " ".join(_term_str(a) for a in self.args)
        return f"({self.predicate} {parts})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple
    precondition: tuple  # of Literal
    add: tuple  # of Atom
    delete: tuple  # of Atom
    cost_fn: str | None = None


@dataclass(frozen=True)
class StreamSpec:
    name: str
    inputs: tuple
    domain: tuple  # of Atom over inputs
    outputs: tuple
    certified: tuple  # of Atom over inputs + outputs


@dataclass(frozen=True)
class DomainDef:
    name: str
    predicates: tuple  # of (name, arity), declaration order
    functions: tuple  # of function names
    actions: tuple  # of ActionSchema

    def arity(self, predicate: str):
        for name, arity in self.predicates:
            if name == predicate:
                return arity
        return None


@dataclass
class TaskProblem:
    name: str
    domain_name: str
    objects: tuple
    init: frozenset  # of ground Atom
    goal: tuple  # of ground Atom (positive conjunction)
    function_values: dict = field(default_factory=dict)
    minimize_cost: bool = False

    def __eq__(self, other):
        return (
            isinstance(other, TaskProblem)
            and self.name == other.name
            and self.domain_name == other.domain_name
            and set(self.objects) == set(other.objects)
            and self.init == other.init
            and set(self.goal) == set(other.goal)
            and self.function_values == other.function_values
            and self.minimize_cost == other.minimize_cost
        )


# -- tokenizer / s-expressions ------------------------------------------------

_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_SYMBOL_RE = re.compile(r"[^\s();]+")


def _tokenize(text: str):
    tokens = []
    line = 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
        elif ch in " \t\r":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append((ch, line))
            i += 1
        else:
            m = _SYMBOL_RE.match(text, i)
            if m is None:
                raise ParseError(f"unexpected character {ch!r}", line)
            tokens.append((m.group(0), line))
            i = m.end()
    return tokens


def _read_sexprs(text: str):
    """Parse text into nested lists; symbols lowercased, numbers as floats."""
    tokens = _tokenize(text)
    stack = [[]]
    open_lines = []
    for tok, line in tokens:
        if tok == "(":
            stack.append([])
            open_lines.append(line)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line)
            done = stack.pop()
            open_lines.pop()
            stack[-1].append(done)
        elif _NUMBER_RE.match(tok):
            stack[-1].append(float(tok))
        else:
            stack[-1].append(tok.lower())
    if len(stack) != 1:
        raise ParseError("unclosed '('", open_lines[-1])
    return stack[0]


def _term_str(term) -> str:
    if isinstance(term, float):
        return repr(term) if term != int(term) else str(int(term))
    return term


def _head(expr):
    return expr[0] if isinstance(expr, list) and expr and isinstance(expr[0], str) else None


def _expr_to_atom(expr) -> Atom:
    if not isinstance(expr, list) or not expr or not isinstance(expr[0], str):
        raise ParseError(f"expected an atom, got {expr!r}")
    return Atom(expr[0], tuple(expr[1:]))


def _conjunction(expr):
    """Flatten an (and ...) / single-atom expression into literals."""
    if expr is None:
        return []
    if _head(expr) == "and":
        items = expr[1:]
    else:
        items = [expr]
    out = []
    for item in items:
        if _head(item) == "not":
            if len(item) != 2:
                raise ParseError("malformed (not ...)")
            out.append(Literal(_expr_to_atom(item[1]), positive=False))
        else:
            out.append(Literal(_expr_to_atom(item), positive=True))
    return out


# -- domain -------------------------------------------------------------------


class _ArityTable:
    """Tracks predicate arities; first use fixes, mismatch is an error."""

    def __init__(self):
        self.table = {}
        self.order = []

    def check(self, atom: Atom, where: str):
        seen = self.table.get(atom.predicate)
        if seen is None:
            self.table[atom.predicate] = len(atom.args)
            self.order.append(atom.predicate)
        elif seen != len(atom.args):
            raise ParseError(
                f"arity mismatch for predicate '{atom.predicate}' in {where}: "
                f"declared {seen}, used with {len(atom.args)}"
            )


def parse_domain(text: str) -> DomainDef:
    exprs = _read_sexprs(text)
    if len(exprs) != 1 or _head(exprs[0]) != "define":
        raise ParseError("expected a single (define (domain ...) ...) form")
    body = exprs[0][1:]
    if not body or _head(body[0]) != "domain" or len(body[0]) != 2:
        raise ParseError("missing (domain <name>)")
    name = body[0][1]

    arities = _ArityTable()
    declared = set()
    functions = []
    actions = []
    for block in body[1:]:
        kind = _head(block)
        if kind == ":requirements":
            continue
        if kind == ":predicates":
            for p in block[1:]:
                atom = _expr_to_atom(p)
                arities.check(atom, ":predicates")
                declared.add(atom.predicate)
            continue
        if kind == ":functions":
            for f in block[1:]:
                if not isinstance(f, list) or not f:
                    raise ParseError("malformed :functions entry")
                functions.append(f[0])
            continue
        if kind == ":action":
            actions.append(_parse_action(block, arities, declared, functions))
            continue
        raise ParseError(f"unsupported domain block {kind!r}")
    predicates = tuple((p, arities.table[p]) for p in arities.order)
    return DomainDef(name, predicates, tuple(functions), tuple(actions))


def _parse_action(block, arities, declared, functions) -> ActionSchema:
    if len(block) < 2 or not isinstance(block[1], str):
        raise ParseError("(:action ...) missing a name")
    name = block[1]
    sections = {}
    i = 2
    while i < len(block):
        key = block[i]
        if not isinstance(key, str) or not key.startswith(":"):
            raise ParseError(f"unexpected token {key!r} in action '{name}'")
        if i + 1 >= len(block):
            raise ParseError(f"action '{name}': {key} missing a body")
        sections[key] = block[i + 1]
        i += 2

    params = tuple(sections.get(":parameters", []))
    for p in params:
        if not is_variable(p):
            raise ParseError(f"action '{name}': parameter {p!r} is not a variable")
    param_set = set(params)

    def check_atom(atom: Atom, where: str):
        if atom.predicate not in declared:
            raise ParseError(
                f"undeclared predicate '{atom.predicate}' in {where} of action '{name}'"
            )
        arities.check(atom, f"action '{name}'")
        loose = atom.variables() - param_set
        if loose:
            raise ParseError(
                f"action '{name}': variable {sorted(loose)[0]} not in :parameters"
            )

    precondition = tuple(_conjunction(sections.get(":precondition")))
    for lit in precondition:
        check_atom(lit.atom, ":precondition")

    add, delete = [], []
    cost_fn = None
    effect = sections.get(":effect")
    items = effect[1:] if _head(effect) == "and" else ([effect] if effect else [])
    for item in items:
        head = _head(item)
        if head == "not":
            atom = _expr_to_atom(item[1])
            check_atom(atom, ":effect")
            delete.append(atom)
        elif head == "increase":
            # (increase (total-cost) (FnName))
            if (
                len(item) != 3
                or _head(item[1]) != "total-cost"
                or not isinstance(item[2], list)
            ):
                raise ParseError(f"action '{name}': unsupported (increase ...) form")
            fn = item[2][0]
            if fn not in functions:
                raise ParseError(f"action '{name}': undeclared cost function '{fn}'")
            cost_fn = fn
        else:
            atom = _expr_to_atom(item)
            check_atom(atom, ":effect")
            add.append(atom)
    return ActionSchema(name, params, precondition, tuple(add), tuple(delete), cost_fn)


# -- problem ------------------------------------------------------------------


def parse_problem(text: str, domain: DomainDef | None = None) -> TaskProblem:
    exprs = _read_sexprs(text)
    if len(exprs) != 1 or _head(exprs[0]) != "define":
        raise ParseError("expected a single (define (problem ...) ...) form")
    body = exprs[0][1:]
    if not body or _head(body[0]) != "problem" or len(body[0]) != 2:
        raise ParseError("missing (problem <name>)")
    name = body[0][1]

    domain_name = ""
    objects = []
    init_atoms = []
    function_values = {}
    goal = []
    minimize = False
    for block in body[1:]:
        kind = _head(block)
        if kind == ":domain":
            domain_name = block[1]
        elif kind == ":objects":
            objects = [o for o in block[1:] if o != "-"]
        elif kind == ":init":
            for item in block[1:]:
                if _head(item) == "=":
                    if len(item) != 3 or not isinstance(item[1], list):
                        raise ParseError("malformed (= (fn) value) in :init")
                    function_values[item[1][0]] = float(item[2])
                    continue
                atom = _expr_to_atom(item)
                if not atom.is_ground():
                    raise ParseError(f"ungrounded atom {atom} in :init")
                init_atoms.append(atom)
        elif kind == ":goal":
            for lit in _conjunction(block[1]):
                if not lit.positive:
                    raise ParseError("negated goal atoms are not supported")
                if not lit.atom.is_ground():
                    raise ParseError(f"ungrounded atom {lit.atom} in :goal")
                goal.append(lit.atom)
        elif kind == ":metric":
            # (:metric minimize (total-cost))
            if len(block) >= 3 and block[1] == "minimize" and _head(block[2]) == "total-cost":
                minimize = True
            else:
                raise ParseError("unsupported :metric form")
        else:
            raise ParseError(f"unsupported problem block {kind!r}")

    if domain is not None:
        declared = {p for p, _ in domain.predicates}
        table = _ArityTable()
        for p, a in domain.predicates:
            table.check(Atom(p, tuple(f"?x{i}" for i in range(a))), "domain")
        for atom in list(init_atoms) + goal:
            if atom.predicate not in declared:
                raise ParseError(f"undeclared predicate '{atom.predicate}' in problem")
            table.check(atom, "problem")

    return TaskProblem(
        name=name,
        domain_name=domain_name,
        objects=tuple(objects),
        init=frozenset(init_atoms),
        goal=tuple(goal),
        function_values=function_values,
        minimize_cost=minimize,
    )


# -- streams ------------------------------------------------------------------


def parse_streams(text: str, domain: DomainDef | None = None):
    exprs = _read_sexprs(text)
    if len(exprs) != 1 or _head(exprs[0]) != "define":
        raise ParseError("expected a single (define (stream ...) ...) form")
    body = exprs[0][1:]
    if not body or _head(body[0]) != "stream":
        raise ParseError("missing (stream <name>)")

    specs = []
    seen = set()
    for block in body[1:]:
        if _head(block) != ":stream":
            raise ParseError(f"unsupported stream block {_head(block)!r}")
        if len(block) < 2 or not isinstance(block[1], str):
            raise ParseError("(:stream ...) missing a name")
        name = block[1]
        if name in seen:
            raise ParseError(f"duplicate stream name '{name}'")
        seen.add(name)
        sections = {}
        i = 2
        while i < len(block):
            key = block[i]
            if not isinstance(key, str) or not key.startswith(":"):
                raise ParseError(f"unexpected token {key!r} in stream '{name}'")
            sections[key] = block[i + 1]
            i += 2
        inputs = tuple(sections.get(":inputs", []))
        outputs = tuple(sections.get(":outputs", []))
        if set(inputs) & set(outputs):
            raise ParseError(f"stream '{name}': outputs overlap inputs")
        dom = tuple(lit.atom for lit in _conjunction(sections.get(":domain")))
        cert = tuple(lit.atom for lit in _conjunction(sections.get(":certified")))
        scope = set(inputs) | set(outputs)
        for atom in dom:
            loose = atom.variables() - set(inputs)
            if loose:
                raise ParseError(
                    f"stream '{name}': domain variable {sorted(loose)[0]} not in :inputs"
                )
        for atom in cert:
            loose = atom.variables() - scope
            if loose:
                raise ParseError(
                    f"stream '{name}': certified variable {sorted(loose)[0]} "
                    "not in :inputs or :outputs"
                )
        if domain is not None:
            declared = {p for p, _ in domain.predicates}
            for atom in dom + cert:
                if atom.predicate not in declared:
                    raise ParseError(
                        f"stream '{name}': undeclared predicate '{atom.predicate}'"
                    )
        specs.append(StreamSpec(name, inputs, dom, outputs, cert))
    return specs


# -- pretty printers ----------------------------------------------------------


def pretty_domain(d: DomainDef) -> str:
    lines = [f"(define (domain {d.name})"]
    preds = " ".join(
        f"({p} {' '.join(f'?x{i}' for i in range(a))})" if a else f"({p})"
        for p, a in d.predicates
    )
    lines.append(f"  (:predicates {preds})")
    if d.functions:
        fns = " ".join(f"({f})" for f in d.functions)
        lines.append(f"  (:functions {fns})")
    for act in d.actions:
        lines.append(f"  (:action {act.name}")
        lines.append(f"    :parameters ({' '.join(act.parameters)})")
        pre = " ".join(str(lit) for lit in act.precondition)
        lines.append(f"    :precondition (and {pre})")
        effs = [str(a) for a in act.add] + [f"(not {a})" for a in act.delete]
        if act.cost_fn:
            effs.append(f"(increase (total-cost) ({act.cost_fn}))")
        lines.append(f"    :effect (and {' '.join(effs)})")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def pretty_problem(p: TaskProblem) -> str:
    lines = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    lines.append(f"  (:objects {' '.join(p.objects)})")
    lines.append("  (:init")
    for atom in sorted(p.init, key=str):
        lines.append(f"    {atom}")
    for fn in sorted(p.function_values):
        lines.append(f"    (= ({fn}) {_term_str(p.function_values[fn])})")
    lines.append("  )")
    goal = " ".join(str(a) for a in p.goal)
    lines.append(f"  (:goal (and {goal}))")
    if p.minimize_cost:
        lines.append("  (:metric minimize (total-cost))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def pretty_streams(specs) -> str:
    lines = ["(define (stream streams)"]
    for s in specs:
        lines.append(f"  (:stream {s.name}")
        lines.append(f"    :inputs ({' '.join(s.inputs)})")
        dom = " ".join(str(a) for a in s.domain)
        lines.append(f"    :domain (and {dom})")
        lines.append(f"    :outputs ({' '.join(s.outputs)})")
        cert = " ".join(str(a) for a in s.certified)
        lines.append(f"    :certified (and {cert})")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"
