"""The elimination loop: define, unfold, fold and difference predicates until
no clause reachable from the goals mentions a list."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Atom, ChcError, Clause, Cmp, Cons, Nil, Program, Var, BoolCmp
from .diffpred import components, embedding_count, find_embedding
from .solver import Sat, constraint_sat
from .transform import (
    Session, TransformError, fold_clause, is_tautology, iter_script, parse_step, reachable,
)

DEFAULT_BUDGET = 500
DEFAULT_ROUNDS = 2


@dataclass
class Success:
    program: Program
    trace: list
    session: Session = field(repr=False, default=None)


@dataclass
class BudgetExhausted:
    session: Session
    worklist: list[int]


@dataclass
class Stuck:
    session: Session
    clause: Clause
    reason: str = ""


class _OutOfBudget(Exception):
    pass


class _Stuck(Exception):
    def __init__(self, clause: Clause, reason: str):
        self.clause, self.reason = clause, reason


def _has_constructor(a: Atom) -> bool:
    return any(isinstance(t, (Cons, Nil)) for t in a.args)


def reducible(a: Atom, program: Program) -> bool:
    """Some In position holds a constructor that the defining heads inspect."""
    if not program.has_pred(a.pred):
        return False
    heads = [c.head for c in program.clauses_for(a.pred)]
    for k in program.decl(a.pred).in_positions():
        if isinstance(a.args[k], (Cons, Nil)) and any(isinstance(h.args[k], (Cons, Nil)) for h in heads):
            return True
    return False


def _is_adt_atom(a: Atom) -> bool:
    return _has_constructor(a) or any(v.sort.is_adt for v in a.vars())


def unfold_selection(clause: Clause, program: Program, defs=None) -> int | None:
    """0-based index of the body atom to unfold, or None."""
    for i, a in enumerate(clause.body):
        if _has_constructor(a):
            return i
    defs = defs or {}
    if not any(d.clause.id == clause.id for d in defs.values()):
        for d in defs.values():
            if find_embedding(clause, d):
                return None
    produced: set[Var] = set()
    for a in clause.body:
        if not program.has_pred(a.pred):
            continue
        decl = program.decl(a.pred)
        for k in decl.out_positions():
            if isinstance(a.args[k], Var):
                produced.add(a.args[k])
    for i, a in enumerate(clause.body):
        decl = program.decl(a.pred)
        for k in decl.in_positions():
            t = a.args[k]
            if isinstance(t, Var) and t.sort.is_adt and t not in produced:
                return i
    return None


class _Driver:
    def __init__(self, session: Session, budget: int, rounds: int = DEFAULT_ROUNDS):
        self.s = session
        self.budget = budget
        self.rounds = rounds

    def spend(self):
        if self.budget <= 0:
            raise _OutOfBudget()
        self.budget -= 1

    def targets(self) -> list[Clause]:
        prog = reachable(self.s.program)
        return [c for c in prog.clauses
                if (c.head is None or c.head.pred in self.s.defs) and not c.is_adt_free()]

    def run(self):
        while True:
            todo = self.targets()
            if not todo:
                break
            self.step(todo[0])
        self.tidy()

    def step(self, c: Clause):
        s = self.s
        defn = s.defs.get(c.head.pred) if c.head is not None else None
        if defn is not None and defn.clause.id == c.id:
            i = unfold_selection(c, s.program, s.defs)
            if i is None:
                i = next(k for k, a in enumerate(c.body) if _is_adt_atom(a))
            self.spend()
            for r in s.unfold(c.id, i + 1):
                self.constructor_round(r)
            return
        if is_tautology(c) or constraint_sat(c.constraints) is Sat.UNSAT:
            self.spend()
            s.prune(c.id)
            return
        if self.simplify(c) is not None:
            return
        # folding with the clause's own predicate first exposes recursion
        own = c.head.pred if c.head is not None else None
        for name, d in sorted(s.defs.items(), key=lambda kv: kv[0] != own):
            if d.clause.id != c.id and fold_clause(c, d) is not None:
                self.spend()
                s.fold(c.id, name)
                return
        for name, d in list(s.defs.items()):
            if d.clause.id == c.id or not find_embedding(c, d):
                continue
            n = embedding_count(c, d)
            try:
                self.spend()
                s.diff(c.id, [name] * n)
            except TransformError:
                self.budget += 1
                continue
            return
        self.define_components(c)

    def constructor_round(self, c: Clause, rounds: int | None = None):
        """Unfold every reducible atom of ``c`` once per round, right to left so
        the positions of the remaining ones stay put."""
        rounds = self.rounds if rounds is None else rounds
        if rounds <= 0:
            return
        prog = self.s.program
        work = [(c, [i for i, a in enumerate(c.body) if reducible(a, prog)])]
        done = []
        while work:
            cl, idxs = work.pop()
            if not idxs:
                done.append(cl)
                continue
            i = idxs[-1]
            self.spend()
            for r in self.s.unfold(cl.id, i + 1):
                work.append((r, idxs[:-1]))
        for cl in done:
            self.constructor_round(cl, rounds - 1)

    def simplify(self, c: Clause, merge: bool = True) -> Clause | None:
        """One local simplification: drop a variable equated to another or to a
        constant, or merge two calls of a predicate with equal inputs."""
        s = self.s
        head = {v.name for v in c.head.vars()} if c.head is not None else set()
        for con in c.constraints:
            if con.op != "=":
                continue
            if isinstance(con, Cmp):
                e = con.lhs - con.rhs
                if len(e.terms) == 1 and abs(e.terms[0][1]) == 1:
                    names = [e.terms[0][0]]
                elif not e.const and len(e.terms) == 2 and e.terms[0][1] == -e.terms[1][1] \
                        and abs(e.terms[0][1]) == 1:
                    names = [n for n in reversed([e.terms[0][0], e.terms[1][0]]) if n not in head]
                else:
                    continue
            elif isinstance(con, BoolCmp):
                vs = [t.name for t in (con.lhs, con.rhs) if isinstance(t, Var)]
                names = vs if len(vs) == 1 else [n for n in reversed(vs) if n not in head]
            else:
                continue
            if names:
                self.spend()
                return s.subst(c.id, names[0])
        if not merge:
            return None
        for i, a in enumerate(c.body):
            if not s.program.has_pred(a.pred):
                continue
            d = s.program.decl(a.pred)
            if not d.out_positions():
                continue
            for j in range(i + 1, len(c.body)):
                b = c.body[j]
                if b.pred == a.pred and all(a.args[k] == b.args[k] for k in d.in_positions()):
                    try:
                        self.spend()
                        return s.merge(c.id, i + 1, j + 1)
                    except TransformError:
                        self.budget += 1
        return None

    def define_components(self, c: Clause):
        s = self.s
        adt = [a for a in c.body if _is_adt_atom(a)]
        if not adt:
            raise _Stuck(c, "no list atoms left but clause is not list-free")
        current = c
        for comp in components(adt):
            atoms = [adt[i] for i in comp]
            ins = _in_vars(s.program, atoms)
            linking = [k for k in current.constraints
                       if k.var_names() and k.var_names() <= {v.name for v in ins}]
            name = self.find_variant_def(atoms, linking)
            if name is None:
                self.spend()
                name = s.define(atoms, linking).name
            self.spend()
            try:
                current = s.fold(current.id, name)
            except TransformError as e:
                raise _Stuck(current, str(e)) from None

    def find_variant_def(self, atoms, constraints) -> str | None:
        from .diffpred import _reuse
        head = _reuse(self.s, atoms, constraints)
        return head.pred if head is not None else None

    def tidy(self):
        """Delete redundant clauses and substitute away trivial equalities in
        the list-free output."""
        s = self.s
        changed = True
        while changed:
            changed = False
            for c in reachable(s.program).clauses:
                if is_tautology(c) or constraint_sat(c.constraints) is Sat.UNSAT:
                    self.spend()
                    s.prune(c.id)
                    changed = True
                    break
                if self.simplify(c, merge=False) is not None:
                    changed = True
                    break


def _in_vars(program: Program, atoms) -> set[Var]:
    from .core import term_vars
    out: set[Var] = set()
    for a in atoms:
        d = program.decl(a.pred)
        for k in d.in_positions():
            out.update(v for v in term_vars(a.args[k]) if not v.sort.is_adt)
    return out


def eliminate(program: Program, budget: int = DEFAULT_BUDGET, hints: str | None = None,
              rounds: int = DEFAULT_ROUNDS):
    """Run the elimination; returns Success, BudgetExhausted or Stuck."""
    s = Session(program)
    drv = _Driver(s, budget, rounds)
    try:
        if hints:
            from .transform import StepFailed
            for i, (_, text) in enumerate(iter_script(hints)):
                drv.spend()
                try:
                    s.apply(parse_step(text, s.program))
                except ChcError as e:
                    raise StepFailed(i, e) from e
        if not drv.targets() and not s.defs:
            for g in program.goals():
                if not g.is_adt_free():
                    break
            else:
                return Success(reachable(s.program), list(s.trace), s)
        drv.run()
    except _OutOfBudget:
        return BudgetExhausted(s, [c.id for c in drv.targets()])
    except _Stuck as e:
        return Stuck(s, e.clause, e.reason)
    return Success(reachable(s.program), list(s.trace), s)


__all__ = ["BudgetExhausted", "DEFAULT_BUDGET", "Stuck", "Success", "eliminate", "unfold_selection"]
