"""Variant-equality of programs: equal up to predicate and variable renaming,
argument order of renamed predicates, body order and constraint normal form."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from .core import Atom, BoolCmp, Clause, IntConst, Program, Sort, Var
from .transform import _implied_by, constraint_key, simplify_constraints

GOAL = None


@dataclass(frozen=True)
class Renaming:
    preds: dict          # name -> (name, permutation)

    def __str__(self) -> str:
        return ", ".join(f"{p}->{q}{list(perm)}" for p, (q, perm) in sorted(self.preds.items()))


def _permute(a: Atom, ren: dict) -> Atom:
    q, perm = ren.get(a.pred, (a.pred, None))
    if perm is None:
        return Atom(q, a.args)
    args = [None] * len(a.args)
    for i, t in enumerate(a.args):
        args[perm[i]] = t
    return Atom(q, tuple(args))


def rename_clause(c: Clause, ren: dict) -> Clause:
    return Clause(_permute(c.head, ren) if c.head is not None else None, c.constraints,
                  tuple(_permute(a, ren) for a in c.body), c.id)


def _cset(cs, names: dict) -> Counter | None:
    cs = simplify_constraints(cs)
    if cs is None:
        return None
    return Counter(constraint_key(c.rename(names)) for c in cs)


def _match_args(xs, ys, m: dict, inv: dict) -> bool:
    for x, y in zip(xs, ys):
        if isinstance(x, Var) != isinstance(y, Var):
            return False
        if isinstance(x, Var):
            if x.sort != y.sort:
                return False
            if m.get(x.name, y.name) != y.name or inv.get(y.name, x.name) != x.name:
                return False
            m[x.name] = y.name
            inv[y.name] = x.name
        elif type(x) is not type(y):
            return False
        elif x != y:
            # compound list terms: compare after renaming
            if not _match_compound(x, y, m, inv):
                return False
    return True


def _match_compound(x, y, m, inv) -> bool:
    from .core import Cons
    if isinstance(x, Cons) and isinstance(y, Cons):
        return _match_args((x.head, x.tail), (y.head, y.tail), m, inv)
    return x == y


def _trivial_equality(c) -> tuple[Var, object] | None:
    """A constraint ``V = W`` or ``V = k`` as a (variable, replacement) pair."""
    if c.op != "=":
        return None
    if isinstance(c, BoolCmp):
        if isinstance(c.lhs, Var):
            return c.lhs, c.rhs
        if isinstance(c.rhs, Var):
            return c.rhs, c.lhs
        return None
    e = c.lhs - c.rhs
    if len(e.terms) == 1 and abs(e.terms[0][1]) == 1:
        v, k = e.terms[0]
        return Var(v, Sort.INT), IntConst(-e.const * k)
    if len(e.terms) == 2 and not e.const and e.terms[0][1] == -e.terms[1][1] \
            and abs(e.terms[0][1]) == 1:
        return Var(e.terms[1][0], Sort.INT), Var(e.terms[0][0], Sort.INT)
    return None


def canonical(c: Clause) -> Clause:
    """Substitute away equalities between variables and of a variable with a
    constant; they only rename or instantiate the clause."""
    while True:
        for k, con in enumerate(c.constraints):
            eq = _trivial_equality(con)
            if eq is not None:
                v, t = eq
                rest = c.constraints[:k] + c.constraints[k + 1:]
                c = Clause(c.head, rest, c.body, c.id).substitute({v: t})
                break
        else:
            return _drop_implied(c)


def _drop_implied(c: Clause) -> Clause:
    """Remove constraints implied by a single other constraint, e.g. X=\\=Y next to X>Y."""
    cs = simplify_constraints(c.constraints)
    if cs is None:
        return c
    keys = [constraint_key(k) for k in cs]
    dropped: set[int] = set()
    for i in range(len(cs)):
        others = {keys[j] for j in range(len(cs)) if j != i and j not in dropped}
        if _implied_by(keys[i], others):
            dropped.add(i)
    return Clause(c.head, tuple(k for i, k in enumerate(cs) if i not in dropped), c.body, c.id)


def _occurrence_order(cs) -> list[str]:
    seen: list[str] = []
    for c in cs:
        for n in sorted(c.var_names()):
            if n not in seen:
                seen.append(n)
    return seen


def clause_variant(c1: Clause, c2: Clause) -> dict | None:
    """Variable bijection making c1 equal to c2 up to body order and constraint
    normalization, or None."""
    c1, c2 = canonical(c1), canonical(c2)
    if (c1.head is None) != (c2.head is None) or len(c1.body) != len(c2.body):
        return None
    if Counter(a.pred for a in c1.body) != Counter(a.pred for a in c2.body):
        return None
    m: dict = {}
    inv: dict = {}
    if c1.head is not None:
        if c1.head.pred != c2.head.pred or not _match_args(c1.head.args, c2.head.args, m, inv):
            return None
    target = _cset(c2.constraints, {})
    vars1 = {v.name for v in c1.vars()}
    vars2 = {v.name for v in c2.vars()}

    def body(i: int, used: frozenset, m: dict, inv: dict):
        if i == len(c1.body):
            yield from constraints(m, inv)
            return
        a = c1.body[i]
        for j, b in enumerate(c2.body):
            if j in used or b.pred != a.pred:
                continue
            mm, ii = dict(m), dict(inv)
            if _match_args(a.args, b.args, mm, ii):
                yield from body(i + 1, used | {j}, mm, ii)

    cs1 = simplify_constraints(c1.constraints)
    sorts1 = {v.name: v.sort for v in c1.vars()}
    sorts2 = {v.name: v.sort for v in c2.vars()}

    def constraints(m: dict, inv: dict):
        rest1 = [n for n in _occurrence_order(cs1 or ()) if n not in m]
        rest1 += sorted(vars1 - set(m) - set(rest1))
        rest2 = sorted(vars2 - set(inv))
        if target is None or cs1 is None:
            if target is None and cs1 is None and len(rest1) == len(rest2):
                yield dict(m, **dict(zip(rest1, rest2)))
            return
        if len(rest1) != len(rest2):
            return
        # a constraint becomes checkable once its last variable is assigned
        due: dict[int, list] = {}
        for c in cs1:
            last = max((rest1.index(n) for n in c.var_names() if n in rest1), default=-1)
            due.setdefault(last, []).append(c)

        def fits(full: dict, k: int, left: Counter) -> bool:
            for c in due.get(k, ()):
                key = constraint_key(c.rename(full))
                if left[key] <= 0:
                    return False
                left[key] -= 1
            return True

        def assign(k: int, full: dict, taken: frozenset, left: Counter):
            if k == len(rest1):
                if not +left:
                    yield dict(full)
                return
            v = rest1[k]
            for w in rest2:
                if w in taken or sorts1[v] != sorts2[w]:
                    continue
                full[v] = w
                rem = Counter(left)
                if fits(full, k, rem):
                    yield from assign(k + 1, full, taken | {w}, rem)
                del full[v]

        left = Counter(target)
        full = dict(m)
        if fits(full, -1, left):
            yield from assign(0, full, frozenset(), left)

    return next(body(0, frozenset(), m, inv), None)


def _signature(p: Program, name: str) -> tuple:
    d = p.decl(name)
    shapes = sorted((len(c.body), c.head.args.__len__()) for c in p.clauses_for(name))
    return (tuple(sorted(s.value for s in d.sorts)), len(shapes), tuple(shapes))


def _preds(p: Program) -> list[str]:
    names = []
    for c in p.clauses:
        for a in c.atoms():
            if a.pred not in names:
                names.append(a.pred)
    return names


def _position_profiles(p: Program) -> dict[str, list[tuple]]:
    """Per predicate and argument position, a multiset of renaming-invariant
    features of every occurrence: constant or variable, and how often the
    variable recurs in the constraints and atoms of its canonical clause."""
    prof = {d.name: [[] for _ in range(d.arity)] for d in p.decls}
    for c in p.clauses:
        c = canonical(c)
        in_cons = Counter(n for k in c.constraints for n in k.var_names())
        in_atoms = Counter(v.name for a in c.atoms() for t in a.args
                           for v in ([t] if isinstance(t, Var) else []))
        for role, a in [("head", c.head)] + [("body", b) for b in c.body]:
            if a is None:
                continue
            for i, t in enumerate(a.args):
                if isinstance(t, Var):
                    feat = (role, "var", in_cons[t.name], in_atoms[t.name])
                else:
                    feat = (role, "const", str(t))
                prof[a.pred][i].append(feat)
    return {k: [tuple(sorted(v)) for v in ps] for k, ps in prof.items()}


def _perms(p1: Program, a: str, p2: Program, b: str, prof1=None, prof2=None):
    s1, s2 = p1.decl(a).sorts, p2.decl(b).sorts
    f1 = prof1[a] if prof1 else None
    f2 = prof2[b] if prof2 else None
    for perm in itertools.permutations(range(len(s1))):
        if all(s1[i] == s2[perm[i]] for i in range(len(s1))):
            if f1 is None or all(f1[i] == f2[perm[i]] for i in range(len(s1))):
                yield perm


def _clauses_match(cs1, cs2, variant=None) -> bool:
    """A bijection between two clause lists, each pair variants."""
    if len(cs1) != len(cs2):
        return False
    variant = variant or (lambda a, b: clause_variant(a, b) is not None)

    def go(i: int, used: frozenset) -> bool:
        if i == len(cs1):
            return True
        for j, c in enumerate(cs2):
            if j not in used and variant(cs1[i], c):
                if go(i + 1, used | {j}):
                    return True
        return False

    return go(0, frozenset())


def variant_equal(p1: Program, p2: Program) -> Renaming | None:
    """A predicate renaming under which the clause multisets are variants."""
    ps1, ps2 = _preds(p1), _preds(p2)
    if len(ps1) != len(ps2) or len(p1.clauses) != len(p2.clauses):
        return None
    prof1, prof2 = _position_profiles(p1), _position_profiles(p2)
    sig2 = {q: (_signature(p2, q), tuple(sorted(prof2[q]))) for q in ps2}
    cands = {p: [q for q in ps2 if sig2[q] == (_signature(p1, p), tuple(sorted(prof1[p])))]
             for p in ps1}
    if any(not v for v in cands.values()):
        return None

    # assign predicates in order of first use from the goals, checking each
    # clause as soon as every predicate it mentions is assigned
    order = _preds(Program(p1.decls, tuple(p1.goals()) + tuple(
        c for c in p1.clauses if c.head is not None)))
    deps = {}
    for c in p1.clauses:
        key = c.head.pred if c.head is not None else GOAL
        deps.setdefault(key, set()).update(a.pred for a in c.body)
        if c.head is not None:
            deps[key].add(c.head.pred)

    def ready(ren: dict, owner) -> bool:
        return all(q in ren for q in deps.get(owner, ()))

    def check(ren: dict, owner) -> bool:
        mine = [rename_clause(c, ren) for c in p1.clauses
                if (c.head.pred if c.head is not None else GOAL) == owner]
        tq = ren[owner][0] if owner is not GOAL else GOAL
        theirs = [c for c in p2.clauses if (c.head.pred if c.head is not None else GOAL) == tq]
        return _clauses_match(mine, theirs, variant)

    checked_owners = [GOAL] + order
    by_owner2: dict = {}
    for d in p2.clauses:
        by_owner2.setdefault(d.head.pred if d.head is not None else GOAL, []).append(d)
    clause_preds = [{a.pred for a in c.atoms()} for c in p1.clauses]
    memo: dict = {}

    def variant(c: Clause, d: Clause) -> bool:
        key = (c, d)
        if key not in memo:
            memo[key] = clause_variant(c, d) is not None
        return memo[key]

    def has_partner(k: int, ren: dict) -> bool:
        # necessary condition, checked as soon as one clause is fully renamed
        c = rename_clause(p1.clauses[k], ren)
        owner = c.head.pred if c.head is not None else GOAL
        return any(variant(c, d) for d in by_owner2.get(owner, ()))

    def go(i: int, ren: dict, taken: frozenset):
        for k, preds in enumerate(clause_preds):
            if k not in done_stack[-1] and all(q in ren for q in preds):
                if not has_partner(k, ren):
                    return None
                done_stack[-1].add(k)
        for owner in checked_owners:
            if owner in deps and ready(ren, owner) and ("owner", owner) not in done_stack[-1]:
                if not check(ren, owner):
                    return None
                done_stack[-1].add(("owner", owner))
        if i == len(order):
            return Renaming(dict(ren))
        p = order[i]
        for q in cands[p]:
            if q in taken:
                continue
            for perm in _perms(p1, p, p2, q, prof1, prof2):
                ren[p] = (q, perm)
                done_stack.append(set(done_stack[-1]))
                r = go(i + 1, ren, taken | {q})
                done_stack.pop()
                if r is not None:
                    return r
                del ren[p]
        return None

    done_stack = [set()]
    return go(0, {}, frozenset())


def unmatched(p1: Program, p2: Program, ren: dict) -> tuple[list[Clause], list[Clause]]:
    """Clauses of each side without a variant partner under a given renaming."""
    left = [rename_clause(c, ren) for c in p1.clauses]
    right = list(p2.clauses)
    lost = []
    for c in left:
        for j, d in enumerate(right):
            if clause_variant(c, d) is not None:
                del right[j]
                break
        else:
            lost.append(c)
    return lost, right


__all__ = ["Renaming", "clause_variant", "rename_clause", "unmatched", "variant_equal"]
