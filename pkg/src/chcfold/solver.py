"""Finite-domain enumeration of constraint solutions and a conservative
satisfiability test for constraint conjunctions."""

from __future__ import annotations

import enum
import math
from collections import Counter
from typing import Iterator, Mapping, Sequence

from .core import BoolCmp, ChcError, Cmp, Constraint, LinExpr, Var, normalize_cmp
from .formula import Formula, eval3, flatten_and, free_vars


class SearchLimit(ChcError):
    """Raised when an enumeration exceeds its assignment cap."""


class Sat(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


def _forced(f: Formula, env: Mapping[str, object]) -> tuple[str, object] | None:
    """A variable whose value the (single-unknown) equality ``f`` determines."""
    if isinstance(f, Cmp) and f.op == "=":
        e = f.lhs - f.rhs
        unknown = [(v, c) for v, c in e.terms if v not in env]
        if len(unknown) != 1:
            return None
        v, c = unknown[0]
        rest = e.const + sum(k * env[n] for n, k in e.terms if n != v)
        if rest % c:
            return (v, None)
        return (v, -rest // c)
    if isinstance(f, BoolCmp):
        lv = isinstance(f.lhs, Var) and f.lhs.name not in env
        rv = isinstance(f.rhs, Var) and f.rhs.name not in env
        if lv == rv:
            return None
        known, unknown = (f.rhs, f.lhs) if lv else (f.lhs, f.rhs)
        val = env[known.name] if isinstance(known, Var) else known.value
        return (unknown.name, val if f.op == "=" else (not val))
    return None


class Search:
    """Backtracking enumeration of assignments satisfying a conjunction.

    ``domains`` maps each variable to the finite list of values it ranges
    over.  Single-unknown equalities are propagated instead of branched on; a
    propagated value outside its domain kills the branch.
    """

    def __init__(self, conjuncts: Sequence[Formula], domains: Mapping[str, Sequence],
                 cap: int | None = None):
        self.conjuncts: list[Formula] = []
        for f in conjuncts:
            self.conjuncts.extend(flatten_and(f))
        self.domains = domains
        self.domain_sets = {v: set(d) for v, d in domains.items()}
        self.cap = cap
        self.nodes = 0
        occ: Counter = Counter()
        for f in self.conjuncts:
            for v in free_vars(f):
                occ[v] += 1
        self.order = sorted(domains, key=lambda v: (-occ[v], v))

    def _tick(self):
        self.nodes += 1
        if self.cap is not None and self.nodes > self.cap:
            raise SearchLimit(f"more than {self.cap} assignments")

    def solutions(self, env: Mapping[str, object] | None = None) -> Iterator[dict]:
        yield from self._go(dict(env or {}))

    def _go(self, env: dict) -> Iterator[dict]:
        changed = True
        while changed:
            changed = False
            for f in self.conjuncts:
                r = eval3(f, env)
                if r is False:
                    return
                if r is None:
                    forced = _forced(f, env)
                    if forced is not None:
                        v, val = forced
                        if val is None or v not in self.domain_sets or val not in self.domain_sets[v]:
                            return
                        env = {**env, v: val}
                        changed = True
        for v in self.order:
            if v not in env:
                for val in self.domains[v]:
                    self._tick()
                    yield from self._go({**env, v: val})
                return
        self._tick()
        yield env


def first_solution(conjuncts, domains, env=None, cap=None) -> dict | None:
    for sol in Search(conjuncts, domains, cap).solutions(env):
        return sol
    return None


# ---------------------------------------------------------------------------
# conservative satisfiability


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep constants as representatives
            if isinstance(rb, bool) or (isinstance(rb, str) and rb.startswith("#")):
                ra, rb = rb, ra
            self.parent[rb] = ra


def _bool_clash(cs: list[BoolCmp]) -> bool:
    uf = _UnionFind()

    def key(t):
        return t.name if isinstance(t, Var) else t.value

    for c in cs:
        if c.op == "=":
            uf.union(key(c.lhs), key(c.rhs))
    if uf.find(True) == uf.find(False):
        return True
    for c in cs:
        if c.op != "=" and uf.find(key(c.lhs)) == uf.find(key(c.rhs)):
            return True
    return False


def _int_unsat(cs: list[Cmp]) -> bool:
    keys = [normalize_cmp(c.op, c.lhs - c.rhs) for c in cs]
    # equality propagation: x - y = 0 merges x and y
    uf = _UnionFind()
    for kind, coeffs, const in keys:
        if kind == "eq" and len(coeffs) == 2 and const == 0 and coeffs[0][1] == -coeffs[1][1] \
                and abs(coeffs[0][1]) == 1:
            uf.union(coeffs[0][0], coeffs[1][0])
    rekeyed = []
    for kind, coeffs, const in keys:
        d: dict[str, int] = {}
        for v, c in coeffs:
            r = uf.find(v)
            d[r] = d.get(r, 0) + c
        e = LinExpr(tuple((v, c) for v, c in d.items() if c), const)
        op = {"eq": "=", "ne": "=\\=", "le": "=<"}[kind]
        rekeyed.append(normalize_cmp(op, e))
    for kind, coeffs, const in rekeyed:
        if not coeffs:
            if (kind == "eq" and const != 0) or (kind == "ne" and const == 0) or (kind == "le" and const > 0):
                return True
            continue
        if kind == "eq":
            g = 0
            for _, c in coeffs:
                g = math.gcd(g, abs(c))
            if const % g:
                return True
    return _dbm_unsat(rekeyed)


_ZERO = "#zero"


def _dbm_unsat(keys) -> bool:
    """Difference-bound closure over constraints with at most two unit variables."""
    edges: dict[tuple[str, str], int] = {}  # (x, y) -> c  meaning x - y <= c

    def add(x, y, c):
        if edges.get((x, y), math.inf) > c:
            edges[(x, y)] = c

    def as_diff(coeffs):
        if len(coeffs) == 1 and abs(coeffs[0][1]) == 1:
            v, c = coeffs[0]
            return (v, _ZERO) if c == 1 else (_ZERO, v)
        if len(coeffs) == 2 and {abs(coeffs[0][1]), abs(coeffs[1][1])} == {1} \
                and coeffs[0][1] == -coeffs[1][1]:
            (a, ca), (b, _) = coeffs
            return (a, b) if ca == 1 else (b, a)
        return None

    nes = []
    for kind, coeffs, const in keys:
        if not coeffs:
            continue
        d = as_diff(coeffs)
        if d is None:
            continue
        x, y = d
        if kind == "le":
            add(x, y, -const)
        elif kind == "eq":
            add(x, y, -const)
            add(y, x, const)
        else:
            nes.append((x, y, -const))
    nodes = sorted({n for e in edges for n in e} | {n for x, y, _ in nes for n in (x, y)})
    if not nodes:
        return False
    dist = {(a, b): (0 if a == b else edges.get((a, b), math.inf)) for a in nodes for b in nodes}
    for k in nodes:
        for i in nodes:
            dik = dist[(i, k)]
            if dik == math.inf:
                continue
            for j in nodes:
                alt = dik + dist[(k, j)]
                if alt < dist[(i, j)]:
                    dist[(i, j)] = alt
    if any(dist[(n, n)] < 0 for n in nodes):
        return True
    for x, y, c in nes:  # x - y != c
        if dist[(x, y)] == c and dist[(y, x)] == -c:
            return True
    return False


def constraint_sat(cs: Sequence[Constraint], box: int = 8, cap: int = 20000) -> Sat:
    """Unsat only when provably contradictory; Sat only with a witness in [-box, box]."""
    bools = [c for c in cs if isinstance(c, BoolCmp)]
    ints = [c for c in cs if isinstance(c, Cmp)]
    if _bool_clash(bools) or _int_unsat(ints):
        return Sat.UNSAT
    names: set[str] = set()
    for c in cs:
        names |= c.var_names()
    bool_names = {v.name for c in bools for v in c.vars()}
    domains = {n: ([False, True] if n in bool_names else list(range(-box, box + 1)))
               for n in sorted(names)}
    try:
        if first_solution(list(cs), domains, cap=cap) is not None:
            return Sat.SAT
    except SearchLimit:
        pass
    return Sat.UNKNOWN
