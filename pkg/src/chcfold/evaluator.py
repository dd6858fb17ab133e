"""Bounded bottom-up least models over a finite universe of small integers
and short integer lists."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    BoolCmp, BoolConst, ChcError, Clause, Cmp, Cons, IntConst, LinExpr, Nil, Program,
    Sort, Var,
)


class UniverseTooSmall(ChcError):
    pass


class UniverseTooLarge(ChcError):
    pass


DEFAULT_CAP = 10**8


@dataclass(frozen=True)
class Universe:
    int_lo: int = 0
    int_hi: int = 2
    max_list_len: int = 3

    def __post_init__(self):
        if self.int_lo > self.int_hi:
            raise ValueError("int_lo must not exceed int_hi")
        if self.max_list_len < 0:
            raise ValueError("max_list_len must be non-negative")

    def ints(self) -> list[int]:
        return list(range(self.int_lo, self.int_hi + 1))

    def lists(self) -> list[tuple[int, ...]]:
        out = []
        for n in range(self.max_list_len + 1):
            out.extend(itertools.product(self.ints(), repeat=n))
        return out

    def size(self, sort: Sort) -> int:
        n = self.int_hi - self.int_lo + 1
        if sort is Sort.INT:
            return n
        if sort is Sort.BOOL:
            return 2
        return sum(n**k for k in range(self.max_list_len + 1))


# ---------------------------------------------------------------------------
# term <-> value


def _match(t, value, env: dict) -> bool:
    if isinstance(t, Var):
        if t.name in env:
            return env[t.name] == value
        env[t.name] = value
        return True
    if isinstance(t, IntConst):
        return type(value) is int and value == t.value
    if isinstance(t, BoolConst):
        return value is t.value
    if isinstance(t, Nil):
        return value == ()
    if isinstance(t, Cons):
        return (isinstance(value, tuple) and len(value) > 0 and _match(t.head, value[0], env)
                and _match(t.tail, value[1:], env))
    return False


def _build(t, env: dict):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, BoolConst):
        return t.value
    if isinstance(t, Nil):
        return ()
    if isinstance(t, Cons):
        tail = _build(t.tail, env)
        return (_build(t.head, env),) + tail
    raise TypeError(t)


def _term_var_names(t) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Cons):
        return _term_var_names(t.head) | _term_var_names(t.tail)
    return set()


def _term_consts(t) -> Iterator[int]:
    if isinstance(t, IntConst):
        yield t.value
    elif isinstance(t, Cons):
        yield from _term_consts(t.head)
        yield from _term_consts(t.tail)


# ---------------------------------------------------------------------------
# join plans


@dataclass
class _Plan:
    clause: Clause
    steps: list
    delta_pos: int | None


def _assignable(c, bound: set[str]):
    """(var, LinExpr for var) when c is an equality with one unbound unit variable."""
    if isinstance(c, Cmp) and c.op == "=":
        e = c.lhs - c.rhs
        free = [(v, k) for v, k in e.terms if v not in bound]
        if len(free) == 1 and abs(free[0][1]) == 1:
            v, k = free[0]
            rest = LinExpr(tuple((n, kk) for n, kk in e.terms if n != v), e.const)
            return v, rest.scale(-k)
    if isinstance(c, BoolCmp) and c.op == "=":
        for x, y in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
            if isinstance(x, Var) and x.name not in bound and (
                    not isinstance(y, Var) or y.name in bound):
                return x.name, y
    return None


def _make_plan(clause: Clause, order: list[int], delta_pos, sorts: dict[str, Sort]) -> _Plan:
    bound: set[str] = set()
    pending = list(clause.constraints)
    steps: list = []

    def settle():
        changed = True
        while changed:
            changed = False
            for c in list(pending):
                if c.var_names() <= bound:
                    steps.append(("check", c))
                    pending.remove(c)
                    changed = True
                    continue
                a = _assignable(c, bound)
                if a is not None:
                    v, expr = a
                    steps.append(("assign", v, expr, sorts.get(v, Sort.INT)))
                    bound.add(v)
                    pending.remove(c)
                    changed = True

    settle()
    for k in order:
        atom = clause.body[k]
        key_pos = tuple(i for i, t in enumerate(atom.args) if _term_var_names(t) <= bound)
        steps.append(("atom", k, atom, key_pos, k == delta_pos))
        for t in atom.args:
            bound |= _term_var_names(t)
        settle()
    rest = [v for v in clause.vars() if v.name not in bound]
    for v in rest:
        if v.name in bound:
            continue
        steps.append(("enum", v.name, v.sort))
        bound.add(v.name)
        settle()
    assert not pending, pending
    return _Plan(clause, steps, delta_pos)


def _order(clause: Clause, first: int | None) -> list[int]:
    """Delta atom first, then greedily the atom sharing most bound variables."""
    n = len(clause.body)
    order = [first] if first is not None else []
    bound: set[str] = set()
    if first is not None:
        bound |= {v.name for v in clause.body[first].vars()}
    while len(order) < n:
        best, score = None, None
        for i in range(n):
            if i in order:
                continue
            names = {v.name for v in clause.body[i].vars()}
            s = (len(names & bound), -i)
            if score is None or s > score:
                best, score = i, s
        order.append(best)
        bound |= {v.name for v in clause.body[best].vars()}
    return order


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Derivation:
    clause_id: int | None
    fact: tuple | None           # (pred, values) or None for a goal
    env: tuple                   # sorted (var, value) pairs
    children: tuple["Derivation", ...] = ()

    def format(self, indent: int = 0) -> str:
        pad = "  " * indent
        what = "false" if self.fact is None else _fmt_fact(self.fact)
        env = ", ".join(f"{k}={_fmt_value(v)}" for k, v in self.env)
        lines = [f"{pad}{what}   [clause {self.clause_id}{': ' + env if env else ''}]"]
        for ch in self.children:
            lines.append(ch.format(indent + 1))
        return "\n".join(lines)


def _fmt_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, tuple):
        return "[" + ",".join(str(x) for x in v) + "]"
    return str(v)


def _fmt_fact(f) -> str:
    pred, vals = f
    if not vals:
        return pred
    return f"{pred}({','.join(_fmt_value(v) for v in vals)})"


@dataclass(frozen=True)
class NoFalseDerived:
    def __str__(self) -> str:
        return "no false derivation"


@dataclass(frozen=True)
class FalseDerived:
    witness: Derivation

    def __str__(self) -> str:
        return "false derived:\n" + self.witness.format(1)


@dataclass
class Extension:
    facts: dict = field(default_factory=dict)
    goal: Derivation | None = None
    origin: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, pred: str) -> set:
        return self.facts.get(pred, set())

    def __contains__(self, fact) -> bool:
        pred, vals = fact
        return tuple(vals) in self.facts.get(pred, set())

    def size(self) -> int:
        return sum(len(s) for s in self.facts.values())

    def dump(self) -> str:
        lines = []
        for pred in sorted(self.facts):
            for vals in sorted(self.facts[pred], key=repr):
                lines.append(_fmt_fact((pred, vals)))
        return "\n".join(lines)

    def derivation(self, fact) -> Derivation:
        cid, env, body = self.origin[fact]
        return Derivation(cid, fact, env, tuple(self.derivation(b) for b in body))


# ---------------------------------------------------------------------------
# evaluation


class _Evaluator:
    def __init__(self, program: Program, u: Universe, strict: bool, cap: int):
        self.p = program
        self.u = u
        self.cap = cap
        self.work = 0
        ints = set(u.ints())
        consts: set[int] = set()
        for c in program.clauses:
            for a in c.atoms():
                for t in a.args:
                    consts.update(_term_consts(t))
        outside = sorted(k for k in consts if k not in ints)
        if outside and strict:
            raise UniverseTooSmall(
                f"constant(s) {', '.join(map(str, outside))} outside [{u.int_lo},{u.int_hi}]")
        self.int_ok = ints | consts
        self.enum_ints = u.ints()
        self.enum_lists = None
        self.facts: dict[str, set] = {d.name: set() for d in program.decls}
        self.index: dict[tuple, dict] = {}
        self.origin: dict = {}
        self.goal: Derivation | None = None
        self._estimate()

    def _estimate(self):
        # atoms are bounded by the facts found; free variables multiply
        for c in self.p.clauses:
            plan = _make_plan(c, _order(c, None), None, self._sorts(c))
            est = 1
            for st in plan.steps:
                if st[0] == "enum":
                    est *= self.u.size(st[2])
            if est > self.cap:
                raise UniverseTooLarge(f"clause {c.id} needs about {est} ground instances")

    @staticmethod
    def _sorts(c: Clause) -> dict[str, Sort]:
        return {v.name: v.sort for v in c.vars()}

    def in_universe(self, value) -> bool:
        if value is True or value is False:
            return True
        if isinstance(value, int):
            return value in self.int_ok
        return len(value) <= self.u.max_list_len and all(x in self.int_ok for x in value)

    def domain(self, sort: Sort):
        if sort is Sort.INT:
            return self.enum_ints
        if sort is Sort.BOOL:
            return (False, True)
        if self.enum_lists is None:
            self.enum_lists = self.u.lists()
        return self.enum_lists

    def lookup(self, pred: str, key_pos: tuple, key: tuple):
        if not key_pos:
            return self.facts[pred]
        idx = self.index.get((pred, key_pos))
        if idx is None:
            idx = {}
            for t in self.facts[pred]:
                idx.setdefault(tuple(t[i] for i in key_pos), []).append(t)
            self.index[(pred, key_pos)] = idx
        return idx.get(key, ())

    def add(self, pred: str, t: tuple):
        self.facts[pred].add(t)
        for (p, kp), idx in self.index.items():
            if p == pred:
                idx.setdefault(tuple(t[i] for i in kp), []).append(t)

    def run_plan(self, plan: _Plan, delta: dict[str, set] | None) -> Iterator[tuple[dict, list]]:
        steps = plan.steps
        n = len(steps)

        def go(i: int, env: dict, used: list):
            self.work += 1
            if self.work > self.cap:
                raise UniverseTooLarge(f"evaluation exceeded {self.cap} steps")
            if i == n:
                yield env, used
                return
            st = steps[i]
            kind = st[0]
            if kind == "check":
                if st[1].evaluate(env):
                    yield from go(i + 1, env, used)
            elif kind == "assign":
                _, v, expr, sort = st
                if isinstance(expr, LinExpr):
                    val = expr.evaluate(env)
                    if val not in self.int_ok:
                        return
                else:
                    val = env[expr.name] if isinstance(expr, Var) else expr.value
                env2 = dict(env)
                env2[v] = val
                yield from go(i + 1, env2, used)
            elif kind == "enum":
                _, v, sort = st
                for val in self.domain(sort):
                    env2 = dict(env)
                    env2[v] = val
                    yield from go(i + 1, env2, used)
            else:
                _, k, atom, key_pos, is_delta = st
                if is_delta:
                    source = delta.get(atom.pred, ())
                else:
                    key = tuple(_build(atom.args[j], env) for j in key_pos)
                    source = self.lookup(atom.pred, key_pos, key)
                for t in list(source):
                    env2 = dict(env)
                    if all(_match(a, val, env2) for a, val in zip(atom.args, t)):
                        yield from go(i + 1, env2, used + [(atom.pred, t)])

        yield from go(0, {}, [])

    def fire(self, plan: _Plan, delta, new: dict[str, set]) -> bool:
        c = plan.clause
        for env, used in self.run_plan(plan, delta):
            env_items = tuple(sorted(env.items()))
            if c.head is None:
                if self.goal is None:
                    kids = tuple(self.derivation(f) for f in used)
                    self.goal = Derivation(c.id, None, env_items, kids)
                continue
            vals = tuple(_build(t, env) for t in c.head.args)
            if not all(self.in_universe(v) for v in vals):
                continue
            pred = c.head.pred
            if vals in self.facts[pred] or vals in new.setdefault(pred, set()):
                continue
            new[pred].add(vals)
            self.origin[(pred, vals)] = (c.id, env_items, tuple(used))
        return bool(new)

    def derivation(self, fact) -> Derivation:
        cid, env, body = self.origin[fact]
        return Derivation(cid, fact, env, tuple(self.derivation(b) for b in body))

    def run(self, naive: bool = False) -> Extension:
        clauses = list(self.p.clauses)
        plans_full = {c.id: _make_plan(c, _order(c, None), None, self._sorts(c)) for c in clauses}
        plans_delta = {}
        for c in clauses:
            for j in range(len(c.body)):
                plans_delta[(c.id, j)] = _make_plan(c, _order(c, j), j, self._sorts(c))
        # round 0: every clause against the (empty) current facts
        new: dict[str, set] = {}
        for c in clauses:
            self.fire(plans_full[c.id], None, new)
        while new:
            for pred, ts in new.items():
                for t in ts:
                    self.add(pred, t)
            delta, new = new, {}
            for c in clauses:
                if not c.body:
                    continue
                if naive:
                    self.fire(plans_full[c.id], None, new)
                    continue
                for j, a in enumerate(c.body):
                    if delta.get(a.pred):
                        self.fire(plans_delta[(c.id, j)], delta, new)
        return Extension({k: v for k, v in self.facts.items()}, self.goal, self.origin)


def least_model(program: Program, u: Universe = Universe(), *, naive: bool = False,
                strict: bool = True, cap: int = DEFAULT_CAP) -> Extension:
    return _Evaluator(program, u, strict, cap).run(naive)


def bounded_sat(program: Program, u: Universe = Universe(), *, strict: bool = True,
                cap: int = DEFAULT_CAP):
    ext = least_model(program, u, strict=strict, cap=cap)
    if ext.goal is not None:
        return FalseDerived(ext.goal)
    return NoFalseDerived()


@dataclass(frozen=True)
class Agree:
    verdict: object

    def __str__(self) -> str:
        return f"agree: {self.verdict}"


@dataclass(frozen=True)
class Disagree:
    first: object
    second: object

    def __str__(self) -> str:
        return f"disagree:\n first: {self.first}\n second: {self.second}"


def compare(p1: Program, p2: Program, u: Universe = Universe(), *, strict: bool = True,
            cap: int = DEFAULT_CAP):
    v1 = bounded_sat(p1, u, strict=strict, cap=cap)
    v2 = bounded_sat(p2, u, strict=strict, cap=cap)
    if isinstance(v1, NoFalseDerived) == isinstance(v2, NoFalseDerived):
        return Agree(v1)
    return Disagree(v1, v2)


def check_witness(program: Program, d: Derivation, ext: Extension | None = None) -> bool:
    """Re-validate a derivation: constraints hold and children match the body."""
    c = program.clause(d.clause_id)
    env = dict(d.env)
    if not all(k.evaluate(env) for k in c.constraints):
        return False
    if d.fact is not None:
        if c.head is None or d.fact != (c.head.pred, tuple(_build(t, env) for t in c.head.args)):
            return False
    elif c.head is not None:
        return False
    body = [(a.pred, tuple(_build(t, env) for t in a.args)) for a in c.body]
    if sorted(body, key=repr) != sorted((ch.fact for ch in d.children), key=repr):
        return False
    return all(check_witness(program, ch) for ch in d.children)


__all__ = [
    "Agree", "Derivation", "Disagree", "Extension", "FalseDerived", "NoFalseDerived",
    "Universe", "UniverseTooLarge", "UniverseTooSmall", "bounded_sat", "check_witness",
    "compare", "least_model",
]
