"""Sorted CHC data model: terms, linear constraints, atoms, clauses, programs.

Everything here is immutable. Integer variables inside linear expressions are
referred to by name only; their sort is implicitly ``Sort.INT``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Union


class ChcError(Exception):
    """Base class for all errors raised by this package."""


class SortMismatch(ChcError):
    pass


class Sort(enum.Enum):
    INT = "int"
    BOOL = "bool"
    LIST = "list(int)"

    def __str__(self) -> str:
        return self.value

    @property
    def is_adt(self) -> bool:
        return self is Sort.LIST


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = Sort.INT

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IntConst:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Nil:
    def __str__(self) -> str:
        return "[]"


@dataclass(frozen=True)
class Cons:
    head: "Term"
    tail: "Term"

    def __str__(self) -> str:
        items = [str(self.head)]
        t = self.tail
        while isinstance(t, Cons):
            items.append(str(t.head))
            t = t.tail
        if isinstance(t, Nil):
            return "[" + ",".join(items) + "]"
        return "[" + ",".join(items) + "|" + str(t) + "]"


Term = Union[Var, IntConst, BoolConst, Nil, Cons]
NIL = Nil()
TRUE = BoolConst(True)
FALSE = BoolConst(False)


def mklist(items: Iterable[Term], tail: Term = NIL) -> Term:
    out = tail
    for t in reversed(list(items)):
        out = Cons(t, out)
    return out


def term_sort(t: Term) -> Sort:
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, IntConst):
        return Sort.INT
    if isinstance(t, BoolConst):
        return Sort.BOOL
    return Sort.LIST


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Cons):
        yield from term_vars(t.head)
        yield from term_vars(t.tail)


def has_constructor(t: Term) -> bool:
    return isinstance(t, (Cons, Nil))


Substitution = Mapping[Var, Term]


def subst_term(t: Term, s: Substitution) -> Term:
    if isinstance(t, Var):
        return s.get(t, t)
    if isinstance(t, Cons):
        return Cons(subst_term(t.head, s), subst_term(t.tail, s))
    return t


# ---------------------------------------------------------------------------
# linear expressions and constraints


@dataclass(frozen=True)
class LinExpr:
    """``sum(coef * var) + const``; ``terms`` keeps first-occurrence order."""

    terms: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def var(name: str) -> "LinExpr":
        return LinExpr(((name, 1),), 0)

    @staticmethod
    def num(value: int) -> "LinExpr":
        return LinExpr((), value)

    @staticmethod
    def of_term(t: Term) -> "LinExpr":
        if isinstance(t, Var):
            if t.sort is not Sort.INT:
                raise SortMismatch(f"{t.name} of sort {t.sort} in arithmetic")
            return LinExpr.var(t.name)
        if isinstance(t, IntConst):
            return LinExpr.num(t.value)
        raise SortMismatch(f"term {t} in arithmetic")

    @staticmethod
    def _build(coeffs: dict[str, int], const: int) -> "LinExpr":
        return LinExpr(tuple((v, c) for v, c in coeffs.items() if c != 0), const)

    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    def __add__(self, other: "LinExpr") -> "LinExpr":
        d = self.coeffs()
        for v, c in other.terms:
            d[v] = d.get(v, 0) + c
        return LinExpr._build(d, self.const + other.const)

    def __neg__(self) -> "LinExpr":
        return LinExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + (-other)

    def scale(self, k: int) -> "LinExpr":
        if k == 0:
            return LinExpr()
        return LinExpr(tuple((v, c * k) for v, c in self.terms), self.const * k)

    def var_names(self) -> list[str]:
        return [v for v, _ in self.terms]

    def is_const(self) -> bool:
        return not self.terms

    def substitute(self, s: Mapping[str, "LinExpr"]) -> "LinExpr":
        if not any(v in s for v, _ in self.terms):
            return self
        out = LinExpr.num(self.const)
        for v, c in self.terms:
            out = out + (s[v].scale(c) if v in s else LinExpr(((v, c),), 0))
        return out

    def evaluate(self, env: Mapping[str, int]) -> int:
        total = self.const
        for v, c in self.terms:
            total += c * env[v]
        return total

    def __str__(self) -> str:
        parts: list[str] = []
        for v, c in self.terms:
            if c == 1:
                mono = v
            elif c == -1:
                mono = "-" + v
            else:
                mono = f"{c}*{v}"
            if parts and not mono.startswith("-"):
                parts.append("+" + mono)
            else:
                parts.append(mono)
        if self.const or not parts:
            if parts and self.const > 0:
                parts.append(f"+{self.const}")
            else:
                parts.append(str(self.const))
        return "".join(parts)


INT_OPS = ("=", "=\\=", "=<", "<", ">=", ">")
_NEGATE = {"=": "=\\=", "=\\=": "=", "=<": ">", "<": ">=", ">=": "<", ">": "=<"}


def _cmp(op: str, a: int, b: int) -> bool:
    if op == "=":
        return a == b
    if op == "=\\=":
        return a != b
    if op == "=<":
        return a <= b
    if op == "<":
        return a < b
    if op == ">=":
        return a >= b
    return a > b


@dataclass(frozen=True)
class Cmp:
    """Linear integer comparison ``lhs op rhs``."""

    op: str
    lhs: LinExpr
    rhs: LinExpr

    def vars(self) -> set[Var]:
        return {Var(n, Sort.INT) for n in self.lhs.var_names() + self.rhs.var_names()}

    def var_names(self) -> set[str]:
        return set(self.lhs.var_names()) | set(self.rhs.var_names())

    def substitute(self, s: Substitution) -> "Cmp":
        m = {v.name: LinExpr.of_term(t) for v, t in s.items()
             if v.sort is Sort.INT and v.name in self.var_names()}
        if not m:
            return self
        return Cmp(self.op, self.lhs.substitute(m), self.rhs.substitute(m))

    def rename(self, m: Mapping[str, str]) -> "Cmp":
        return Cmp(self.op, self.lhs.substitute({k: LinExpr.var(v) for k, v in m.items()}),
                   self.rhs.substitute({k: LinExpr.var(v) for k, v in m.items()}))

    def evaluate(self, env: Mapping[str, object]) -> bool:
        return _cmp(self.op, self.lhs.evaluate(env), self.rhs.evaluate(env))

    def negate(self) -> "Cmp":
        return Cmp(_NEGATE[self.op], self.lhs, self.rhs)

    def diff(self) -> LinExpr:
        return self.lhs - self.rhs

    def normal(self) -> tuple:
        return normalize_cmp(self.op, self.lhs - self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs}{self.op}{self.rhs}"


def normalize_cmp(op: str, e: LinExpr) -> tuple:
    """Normal key ``(kind, ((var, coef), ...), const)`` meaning ``e kind 0``.

    kinds: ``eq``, ``ne``, ``le``.  Strict inequalities are tightened over the
    integers, coefficients are divided by their gcd, variables sorted by name.
    """
    if op in ("<", ">=", ">"):
        if op == "<":
            e = e + LinExpr.num(1)
        elif op == ">=":
            e = -e
        else:
            e = -e + LinExpr.num(1)
        op = "=<"
    coeffs = sorted(e.terms)
    const = e.const
    if not coeffs:
        return ({"=": "eq", "=\\=": "ne", "=<": "le"}[op], (), const)
    g = 0
    for _, c in coeffs:
        g = math.gcd(g, abs(c))
    if op == "=<":
        coeffs = [(v, c // g) for v, c in coeffs]
        const = -((-const) // g)  # ceil(const / g)
        return ("le", tuple(coeffs), const)
    if const % g == 0:
        coeffs = [(v, c // g) for v, c in coeffs]
        const //= g
    if coeffs[0][1] < 0:
        coeffs = [(v, -c) for v, c in coeffs]
        const = -const
    return ("eq" if op == "=" else "ne", tuple(coeffs), const)


def cmp_from_normal(key: tuple) -> "Cmp":
    kind, coeffs, const = key
    e = LinExpr(tuple(coeffs), const)
    return Cmp({"eq": "=", "ne": "=\\=", "le": "=<"}[kind], e, LinExpr())


@dataclass(frozen=True)
class BoolCmp:
    """Equality or disequality between boolean terms (variables or constants)."""

    op: str
    lhs: Term
    rhs: Term

    def vars(self) -> set[Var]:
        return {t for t in (self.lhs, self.rhs) if isinstance(t, Var)}

    def var_names(self) -> set[str]:
        return {v.name for v in self.vars()}

    def substitute(self, s: Substitution) -> "BoolCmp":
        return BoolCmp(self.op, subst_term(self.lhs, s), subst_term(self.rhs, s))

    def rename(self, m: Mapping[str, str]) -> "BoolCmp":
        def r(t):
            return Var(m.get(t.name, t.name), Sort.BOOL) if isinstance(t, Var) else t
        return BoolCmp(self.op, r(self.lhs), r(self.rhs))

    def evaluate(self, env: Mapping[str, object]) -> bool:
        a = env[self.lhs.name] if isinstance(self.lhs, Var) else self.lhs.value
        b = env[self.rhs.name] if isinstance(self.rhs, Var) else self.rhs.value
        return (a == b) == (self.op == "=")

    def negate(self) -> "BoolCmp":
        return BoolCmp("=\\=" if self.op == "=" else "=", self.lhs, self.rhs)

    def normal(self) -> tuple:
        a, b = sorted((str(self.lhs), str(self.rhs)))
        return ("beq" if self.op == "=" else "bne", a, b)

    def __str__(self) -> str:
        return f"{self.lhs}{self.op}{self.rhs}"


Constraint = Union[Cmp, BoolCmp]


def is_ground_constraint(c: Constraint) -> bool:
    return not c.var_names()


# ---------------------------------------------------------------------------
# atoms, clauses, programs


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    def vars(self) -> list[Var]:
        out: list[Var] = []
        for a in self.args:
            for v in term_vars(a):
                if v not in out:
                    out.append(v)
        return out

    def substitute(self, s: Substitution) -> "Atom":
        return Atom(self.pred, tuple(subst_term(a, s) for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class PredDecl:
    name: str
    sorts: tuple[Sort, ...]
    modes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.modes:
            object.__setattr__(self, "modes", default_modes(len(self.sorts)))
        if len(self.modes) != len(self.sorts):
            raise ChcError(f"modes of {self.name} do not cover all arguments")

    @property
    def arity(self) -> int:
        return len(self.sorts)

    def in_positions(self) -> list[int]:
        return [i for i, m in enumerate(self.modes) if m == "in"]

    def out_positions(self) -> list[int]:
        return [i for i, m in enumerate(self.modes) if m == "out"]


def default_modes(n: int) -> tuple[str, ...]:
    return tuple(["in"] * (n - 1) + ["out"]) if n else ()


@dataclass(frozen=True)
class Clause:
    head: Atom | None
    constraints: tuple[Constraint, ...] = ()
    body: tuple[Atom, ...] = ()
    id: int | None = field(default=None, compare=False)

    @property
    def is_goal(self) -> bool:
        return self.head is None

    def vars(self) -> list[Var]:
        out: list[Var] = []
        seen: set[Var] = set()

        def add(v: Var):
            if v not in seen:
                seen.add(v)
                out.append(v)

        if self.head is not None:
            for v in self.head.vars():
                add(v)
        for a in self.body:
            for v in a.vars():
                add(v)
        for c in self.constraints:
            for v in sorted(c.vars(), key=lambda v: v.name):
                add(v)
        return out

    def var_names(self) -> set[str]:
        return {v.name for v in self.vars()}

    def substitute(self, s: Substitution) -> "Clause":
        return Clause(
            self.head.substitute(s) if self.head is not None else None,
            tuple(c.substitute(s) for c in self.constraints),
            tuple(a.substitute(s) for a in self.body),
            self.id,
        )

    def with_id(self, cid: int | None) -> "Clause":
        return replace(self, id=cid)

    def is_adt_free(self) -> bool:
        return all(not v.sort.is_adt for v in self.vars()) and not any(
            _has_list_term(a) for a in self.atoms())

    def atoms(self) -> list[Atom]:
        return ([self.head] if self.head is not None else []) + list(self.body)

    def __str__(self) -> str:
        from .syntax import format_clause
        return format_clause(self)


def _has_list_term(a: Atom) -> bool:
    return any(isinstance(t, (Nil, Cons)) for t in a.args)


@dataclass(frozen=True)
class Program:
    decls: tuple[PredDecl, ...] = ()
    clauses: tuple[Clause, ...] = ()

    def decl(self, name: str) -> PredDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def has_pred(self, name: str) -> bool:
        return any(d.name == name for d in self.decls)

    def clauses_for(self, pred: str) -> list[Clause]:
        return [c for c in self.clauses if c.head is not None and c.head.pred == pred]

    def clause(self, cid: int) -> Clause:
        for c in self.clauses:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def next_id(self) -> int:
        ids = [c.id for c in self.clauses if c.id is not None]
        return max(ids, default=0) + 1

    def goals(self) -> list[Clause]:
        return [c for c in self.clauses if c.head is None]

    def is_adt_free(self) -> bool:
        return all(c.is_adt_free() for c in self.clauses)

    def with_decl(self, d: PredDecl) -> "Program":
        return Program(self.decls + (d,), self.clauses)

    def __str__(self) -> str:
        from .syntax import print_program
        return print_program(self)


# ---------------------------------------------------------------------------
# renaming, unification, variants

_SUFFIX = re.compile(r"_\d+$")


class NameSupply:
    """Fresh variable names ``base_k`` from one monotone counter."""

    def __init__(self, start: int = 1):
        self.next = start

    def fresh(self, base: str, avoid: set[str] | frozenset = frozenset()) -> str:
        base = _SUFFIX.sub("", base) or "V"
        while True:
            name = f"{base}_{self.next}"
            self.next += 1
            if name not in avoid:
                return name


def rename_apart(clause: Clause, forbidden: Iterable[str],
                 supply: NameSupply | None = None) -> tuple[Clause, dict[Var, Var]]:
    supply = supply or NameSupply()
    avoid = set(forbidden) | clause.var_names()
    ren: dict[Var, Var] = {}
    for v in clause.vars():
        new = supply.fresh(v.name, avoid)
        avoid.add(new)
        ren[v] = Var(new, v.sort)
    return clause.substitute(ren), ren


def invert_renaming(ren: Mapping[Var, Var]) -> dict[Var, Var]:
    return {b: a for a, b in ren.items()}


def _walk(t: Term, s: dict[Var, Term]) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def _occurs(v: Var, t: Term, s: dict[Var, Term]) -> bool:
    t = _walk(t, s)
    if t == v:
        return True
    if isinstance(t, Cons):
        return _occurs(v, t.head, s) or _occurs(v, t.tail, s)
    return False


def resolve(s: Mapping[Var, Term]) -> dict[Var, Term]:
    """Fully apply a triangular substitution to its own range (idempotent form)."""
    def full(t: Term) -> Term:
        t = _walk(t, s)  # type: ignore[arg-type]
        if isinstance(t, Cons):
            return Cons(full(t.head), full(t.tail))
        return t
    return {v: full(t) for v, t in s.items()}


def unify(a: Term, b: Term, s: dict[Var, Term] | None = None,
          keep: frozenset | set = frozenset()) -> dict[Var, Term] | None:
    """Most general unifier of ``a`` and ``b`` (extending ``s``), or None.

    When two variables meet, the one not in ``keep`` is bound, preferring
    the right-hand side's variable.  Raises SortMismatch on differing sorts.
    """
    if term_sort(a) is not term_sort(b):
        raise SortMismatch(f"cannot unify {a}:{term_sort(a)} with {b}:{term_sort(b)}")
    s = dict(s or {})
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = _walk(x, s), _walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var) and isinstance(y, Var):
            if y in keep and x not in keep:
                s[x] = y
            else:
                s[y] = x
            continue
        if isinstance(y, Var):
            x, y = y, x
        if isinstance(x, Var):
            if _occurs(x, y, s):
                return None
            s[x] = y
            continue
        if isinstance(x, Cons) and isinstance(y, Cons):
            stack.append((x.tail, y.tail))
            stack.append((x.head, y.head))
            continue
        return None
    return resolve(s)


def unify_atoms(a: Atom, b: Atom, keep: frozenset | set = frozenset()) -> dict[Var, Term] | None:
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    s: dict[Var, Term] | None = {}
    for x, y in zip(a.args, b.args):
        s = unify(x, y, s, keep)
        if s is None:
            return None
    return s


def match_term(pattern: Term, target: Term, s: dict[Var, Term]) -> bool:
    """One-way matching: extend ``s`` so that pattern·s == target (in place)."""
    if isinstance(pattern, Var):
        if pattern in s:
            return s[pattern] == target
        if term_sort(target) is not pattern.sort:
            return False
        s[pattern] = target
        return True
    if isinstance(pattern, Cons):
        return (isinstance(target, Cons) and match_term(pattern.head, target.head, s)
                and match_term(pattern.tail, target.tail, s))
    return pattern == target


def is_variant(a: list[Atom] | tuple[Atom, ...], b: list[Atom] | tuple[Atom, ...]) -> dict[Var, Var] | None:
    """Bijective renaming rho with a·rho == b elementwise, or None."""
    if len(a) != len(b):
        return None
    fwd: dict[Var, Var] = {}
    back: dict[Var, Var] = {}

    def go(x: Term, y: Term) -> bool:
        if isinstance(x, Var):
            if not isinstance(y, Var) or x.sort is not y.sort:
                return False
            if fwd.get(x, y) != y or back.get(y, x) != x:
                return False
            fwd[x] = y
            back[y] = x
            return True
        if isinstance(x, Cons):
            return isinstance(y, Cons) and go(x.head, y.head) and go(x.tail, y.tail)
        return x == y

    for p, q in zip(a, b):
        if p.pred != q.pred or len(p.args) != len(q.args):
            return None
        if not all(go(x, y) for x, y in zip(p.args, q.args)):
            return None
    return fwd


def partition_vars(clause: Clause) -> tuple[set[Var], set[Var]]:
    vs = clause.vars()
    return {v for v in vs if v.sort.is_adt}, {v for v in vs if not v.sort.is_adt}
