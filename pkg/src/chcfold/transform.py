"""Define, unfold and fold, plus a few auxiliary rewriting steps, over a
mutable session that records a replayable trace."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    Atom, BoolCmp, ChcError, Clause, Cmp, Constraint, IntConst, LinExpr, NameSupply,
    PredDecl, Program, Sort, Var, match_term, rename_apart, unify_atoms,
)
from .solver import Sat, constraint_sat
from .syntax import format_clause, parse_clause


class TransformError(ChcError):
    pass


class EmptyBody(TransformError):
    pass


class NoDefiningClauses(TransformError):
    pass


class SelectorOutOfRange(TransformError):
    pass


class UnknownClause(TransformError):
    pass


class StepFailed(TransformError):
    def __init__(self, index: int, reason: Exception | str):
        self.index, self.reason = index, reason
        name = type(reason).__name__ if isinstance(reason, Exception) else "Error"
        super().__init__(f"step {index}: {name}: {reason}")


@dataclass(frozen=True)
class Definition:
    clause: Clause
    introduced_at: int = 0

    @property
    def name(self) -> str:
        return self.clause.head.pred

    @property
    def atoms(self) -> tuple[Atom, ...]:
        return self.clause.body


# ---------------------------------------------------------------------------
# trace steps


@dataclass(frozen=True)
class Define:
    name: str
    clause: Clause  # the full definition clause (head included)

    def __str__(self) -> str:
        return "define " + format_clause(self.clause)


@dataclass(frozen=True)
class Unfold:
    cid: int
    index: int  # 1-based body-atom position

    def __str__(self) -> str:
        return f"unfold {self.cid} {self.index}"


@dataclass(frozen=True)
class Fold:
    cid: int
    name: str
    positions: tuple[int, ...] = ()

    def __str__(self) -> str:
        pos = "".join(f" {p}" for p in self.positions)
        return f"fold {self.cid} {self.name}{pos}"


@dataclass(frozen=True)
class DiffIntro:
    cid: int
    names: tuple[str, ...]

    def __str__(self) -> str:
        return f"diff {self.cid} {' '.join(self.names)}"


@dataclass(frozen=True)
class Prune:
    cid: int

    def __str__(self) -> str:
        return f"prune {self.cid}"


@dataclass(frozen=True)
class Merge:
    cid: int
    first: int
    second: int

    def __str__(self) -> str:
        return f"merge {self.cid} {self.first} {self.second}"


@dataclass(frozen=True)
class Subst:
    cid: int
    var: str

    def __str__(self) -> str:
        return f"subst {self.cid} {self.var}"


@dataclass(frozen=True)
class Split:
    cid: int
    index: int  # 1-based constraint position

    def __str__(self) -> str:
        return f"split {self.cid} {self.index}"


Step = Define | Unfold | Fold | DiffIntro | Prune | Merge | Subst | Split


def format_trace(steps) -> str:
    return "".join(f"{s}\n" for s in steps)


# ---------------------------------------------------------------------------
# constraint housekeeping


def constraint_key(c: Constraint) -> tuple:
    return c.normal()


def trivial_truth(c: Constraint) -> bool | None:
    """Truth value of a constraint that does not depend on its variables."""
    if isinstance(c, BoolCmp):
        if c.lhs == c.rhs:
            return c.op == "="
        if not c.var_names():
            return c.evaluate({})
        return None
    kind, coeffs, const = c.normal()
    if coeffs:
        return None
    return {"eq": const == 0, "ne": const != 0, "le": const <= 0}[kind]


def simplify_constraints(cs) -> tuple[Constraint, ...] | None:
    """Drop ground-true and duplicate constraints; None if one is ground-false."""
    out: list[Constraint] = []
    seen = set()
    for c in cs:
        truth = trivial_truth(c)
        if truth is not None:
            if not truth:
                return None
            continue
        k = constraint_key(c)
        if k in seen:
            continue
        seen.add(k)
        out.append(c)
    return tuple(out)


def _implied_by(k: tuple, have: set) -> bool:
    """Does one normalized constraint in ``have`` imply ``k``?"""
    if k in have:
        return True
    kind, coeffs, const = k
    for hk, hco, hconst in have:
        if hk == "le" and kind == "le" and hco == coeffs and hconst >= const:
            return True
        if hk == "eq":
            neg = tuple((v, -c) for v, c in hco)
            if kind == "le" and ((hco == coeffs and hconst == const)
                                 or (neg == coeffs and -hconst == const)):
                return True
            if kind == "ne" and hco == coeffs and hconst != const:
                return True
        if hk == "le" and kind == "ne":
            # a.x + c <= 0 excludes a.x + c' = 0 whenever c' < c
            if hco == coeffs and const < hconst:
                return True
            neg = tuple((v, -c) for v, c in hco)
            if neg == coeffs and -const < hconst:
                return True
    return False


# ---------------------------------------------------------------------------
# the rules as pure functions


def base_vars(atoms, constraints=()) -> list[Var]:
    out: list[Var] = []
    for a in atoms:
        for v in a.vars():
            if not v.sort.is_adt and v not in out:
                out.append(v)
    for c in constraints:
        for v in sorted(c.vars(), key=lambda v: v.name):
            if v not in out:
                out.append(v)
    return out


def out_vars(program: Program, atoms) -> set[Var]:
    outs: set[Var] = set()
    for a in atoms:
        d = program.decl(a.pred)
        for i in d.out_positions():
            outs.update(v for v in _vars_of(a.args[i]))
    return outs


def _vars_of(t):
    from .core import term_vars
    return term_vars(t)


def make_definition_clause(program: Program, name: str, atoms, constraints,
                           head_args=None, out: set | None = None) -> tuple[Clause, PredDecl]:
    if not atoms:
        raise EmptyBody(f"definition of {name} has no atoms")
    bv = base_vars(atoms, constraints)
    if head_args is None:
        head_args = bv
    elif set(head_args) != set(bv) or len(set(head_args)) != len(head_args):
        raise TransformError(f"head of {name} must list exactly the variables "
                             f"{', '.join(v.name for v in bv)}")
    outs = out if out is not None else out_vars(program, atoms)
    modes = tuple("out" if v in outs else "in" for v in head_args)
    decl = PredDecl(name, tuple(v.sort for v in head_args), modes)
    clause = Clause(Atom(name, tuple(head_args)), tuple(constraints), tuple(atoms))
    return clause, decl


def unfold_clause(program: Program, clause: Clause, index: int,
                  supply: NameSupply) -> list[Clause]:
    """Unfold ``clause`` at body atom ``index`` (0-based); results carry no ids."""
    if not 0 <= index < len(clause.body):
        raise SelectorOutOfRange(f"clause {clause.id} has no atom {index + 1}")
    target = clause.body[index]
    defining = program.clauses_for(target.pred)
    if not defining:
        raise NoDefiningClauses(f"no clauses define {target.pred}")
    keep = set(clause.vars())
    results = []
    for d in defining:
        d2, _ = rename_apart(d, clause.var_names(), supply)
        theta = unify_atoms(target, d2.head, keep)
        if theta is None:
            continue
        body = clause.body[:index] + d2.body + clause.body[index + 1:]
        cs = simplify_constraints([c.substitute(theta) for c in clause.constraints + d2.constraints])
        if cs is None:
            continue
        new = Clause(clause.head, cs, body).substitute(theta)
        if constraint_sat(new.constraints) is Sat.UNSAT:
            continue
        results.append(new)
    return results


def _match_atoms(def_atoms, target_body, positions=None):
    """Injective one-way matching of def atoms into the target body.

    Yields (theta, positions) in lexicographic order of target positions."""
    n = len(def_atoms)

    def go(i, theta, used):
        if i == n:
            yield theta, tuple(used)
            return
        cands = [positions[i]] if positions else range(len(target_body))
        for j in cands:
            if j in used or j >= len(target_body):
                continue
            a, b = def_atoms[i], target_body[j]
            if a.pred != b.pred or len(a.args) != len(b.args):
                continue
            th = dict(theta)
            if all(match_term(x, y, th) for x, y in zip(a.args, b.args)):
                yield from go(i + 1, th, used + [j])

    yield from go(0, {}, [])


def fold_clause(clause: Clause, defn: Definition,
                positions: tuple[int, ...] | None = None) -> Clause | None:
    """Fold with ``defn``; ``positions`` (0-based) pins the target atoms."""
    d = defn.clause
    head_vars = set(d.head.vars())
    have = {constraint_key(c) for c in clause.constraints}
    for theta, used in _match_atoms(d.body, clause.body, positions):
        if any(v not in theta for v in head_vars):
            continue
        if not all(_implied_by(constraint_key(c.substitute(theta)), have)
                   for c in d.constraints if c.var_names() <= {v.name for v in theta}):
            continue
        if any(not c.var_names() <= {v.name for v in theta} for c in d.constraints):
            continue
        # existential variables must map to distinct, otherwise unused variables
        rest = [a for j, a in enumerate(clause.body) if j not in used]
        outside: set[Var] = set()
        if clause.head is not None:
            outside.update(clause.head.vars())
        for a in rest:
            outside.update(a.vars())
        for c in clause.constraints:
            outside.update(c.vars())
        images = []
        ok = True
        for v in d.vars():
            if v in head_vars:
                continue
            t = theta.get(v)
            if not isinstance(t, Var) or t in outside or t in images:
                ok = False
                break
            images.append(t)
        if not ok:
            continue
        new_atom = d.head.substitute(theta)
        first = min(used)
        body = []
        for j, a in enumerate(clause.body):
            if j == first:
                body.append(new_atom)
            if j not in used:
                body.append(a)
        return Clause(clause.head, clause.constraints, tuple(body))
    return None


def is_tautology(c: Clause) -> bool:
    return c.head is not None and c.head in c.body


# ---------------------------------------------------------------------------
# session


class Session:
    """A transformation in progress: the current program, the definitions
    introduced so far and the trace of applied steps."""

    def __init__(self, program: Program):
        self.program = program
        self.defs: dict[str, Definition] = {}
        self.trace: list = []
        self.supply = NameSupply()
        self._next_id = program.next_id()
        self.history: list[tuple[object, Program]] = []

    # -- bookkeeping -------------------------------------------------------
    def snapshot(self) -> tuple:
        return (self.program, dict(self.defs), len(self.trace), len(self.history),
                self._next_id, self.supply.next)

    def restore(self, snap: tuple):
        """Undo everything done since ``snap`` was taken."""
        self.program, defs, nt, nh, self._next_id, self.supply.next = snap
        self.defs = defs
        del self.trace[nt:]
        del self.history[nh:]

    def _new_id(self) -> int:
        cid = self._next_id
        self._next_id += 1
        return cid

    def clause(self, cid: int) -> Clause:
        try:
            return self.program.clause(cid)
        except KeyError:
            raise UnknownClause(f"no clause with id {cid}") from None

    def _replace(self, cid: int | None, new: list[Clause]) -> list[Clause]:
        """Put ``new`` where clause ``cid`` was (or at the end); assigns ids."""
        new = [c.with_id(self._new_id()) for c in new]
        clauses = list(self.program.clauses)
        if cid is None:
            clauses.extend(new)
        else:
            i = next(i for i, c in enumerate(clauses) if c.id == cid)
            clauses[i:i + 1] = new
        self.program = Program(self.program.decls, tuple(clauses))
        return new

    def _record(self, step, before: Program):
        self.trace.append(step)
        self.history.append((step, before))

    def fresh_name(self, base: str) -> str:
        k = 1
        taken = {d.name for d in self.program.decls}
        while True:
            name = f"{base}{k}"
            if name not in taken:
                return name
            k += 1

    def _checked_name(self, name: str) -> str:
        while self.program.has_pred(name):
            name += "_g"
        return name

    # -- rules -------------------------------------------------------------
    def define(self, atoms, constraints=(), name: str | None = None, head_args=None,
               out: set | None = None) -> Definition:
        before = self.program
        name = self._checked_name(name) if name else self.fresh_name("new")
        clause, decl = make_definition_clause(self.program, name, atoms, constraints, head_args, out)
        self.program = self.program.with_decl(decl)
        [clause] = self._replace(None, [clause])
        defn = Definition(clause, len(self.trace))
        self.defs[name] = defn
        self._record(Define(name, clause), before)
        return defn

    def unfold(self, cid: int, index: int) -> list[Clause]:
        """Unfold clause ``cid`` at 1-based body atom ``index``."""
        before = self.program
        c = self.clause(cid)
        results = unfold_clause(self.program, c, index - 1, self.supply)
        new = self._replace(cid, results)
        self._record(Unfold(cid, index), before)
        return new

    def fold(self, cid: int, name: str, positions: tuple[int, ...] = ()) -> Clause:
        before = self.program
        c = self.clause(cid)
        if name not in self.defs:
            raise TransformError(f"{name} is not a definition")
        pos = tuple(p - 1 for p in positions) or None
        res = fold_clause(c, self.defs[name], pos)
        if res is None:
            raise TransformError(f"clause {cid} cannot be folded with {name}")
        [new] = self._replace(cid, [res])
        self._record(Fold(cid, name, tuple(positions)), before)
        return new

    def try_fold(self, cid: int, name: str) -> Clause | None:
        c = self.clause(cid)
        if fold_clause(c, self.defs[name]) is None:
            return None
        return self.fold(cid, name)

    def prune(self, cid: int):
        before = self.program
        c = self.clause(cid)
        if not (is_tautology(c) or constraint_sat(c.constraints) is Sat.UNSAT):
            raise TransformError(f"clause {cid} is neither unsatisfiable nor a tautology")
        self._replace(cid, [])
        self._record(Prune(cid), before)

    def merge(self, cid: int, i: int, j: int) -> Clause:
        """Identify the outputs of two calls with equal inputs (functional dependency)."""
        before = self.program
        c = self.clause(cid)
        try:
            a, b = c.body[i - 1], c.body[j - 1]
        except IndexError:
            raise SelectorOutOfRange(f"clause {cid} has no atoms {i} and {j}") from None
        if i == j or a.pred != b.pred:
            raise TransformError("merge needs two distinct calls of one predicate")
        d = self.program.decl(a.pred)
        if any(a.args[k] != b.args[k] for k in d.in_positions()):
            raise TransformError("inputs of the merged calls differ")
        keep = set(c.head.vars()) if c.head is not None else set()
        s: dict | None = {}
        from .core import unify
        for k in d.out_positions():
            s = unify(a.args[k], b.args[k], s, keep)
            if s is None:
                raise TransformError("outputs of the merged calls do not unify")
        body = tuple(x for n, x in enumerate(c.body) if n != j - 1)
        res = Clause(c.head, c.constraints, body).substitute(s)
        cs = simplify_constraints(res.constraints)
        if cs is None:
            raise TransformError("merge makes the clause unsatisfiable")
        [new] = self._replace(cid, [Clause(res.head, cs, res.body)])
        self._record(Merge(cid, i, j), before)
        return new

    def subst(self, cid: int, var: str) -> Clause:
        """Eliminate ``var`` using an equality constraint that defines it."""
        before = self.program
        c = self.clause(cid)
        res = eliminate_var(c, var)
        if res is None:
            raise TransformError(f"no usable equality for {var} in clause {cid}")
        [new] = self._replace(cid, [res])
        self._record(Subst(cid, var), before)
        return new

    def split(self, cid: int, index: int) -> list[Clause]:
        """Case-split a disequality X=\\=Y into X<Y and X>Y."""
        before = self.program
        c = self.clause(cid)
        if not 1 <= index <= len(c.constraints):
            raise SelectorOutOfRange(f"clause {cid} has no constraint {index}")
        k = c.constraints[index - 1]
        if not isinstance(k, Cmp) or k.op != "=\\=":
            raise TransformError(f"constraint {k} is not an integer disequality")
        out = []
        for op in ("<", ">"):
            cs = list(c.constraints)
            cs[index - 1] = Cmp(op, k.lhs, k.rhs)
            out.append(Clause(c.head, tuple(cs), c.body))
        new = self._replace(cid, out)
        self._record(Split(cid, index), before)
        return new

    def diff(self, cid: int, names) -> Clause:
        from .diffpred import diff_step
        snap = self.snapshot()
        try:
            return diff_step(self, cid, tuple(names))
        except TransformError:
            self.restore(snap)
            raise

    def add_external(self, step, before: Program):
        self._record(step, before)

    # -- replay ------------------------------------------------------------
    def apply(self, step):
        if isinstance(step, Define):
            cl = step.clause
            return self.define(cl.body, cl.constraints, step.name, list(cl.head.args))
        if isinstance(step, Unfold):
            return self.unfold(step.cid, step.index)
        if isinstance(step, Fold):
            return self.fold(step.cid, step.name, step.positions)
        if isinstance(step, DiffIntro):
            return self.diff(step.cid, step.names)
        if isinstance(step, Prune):
            return self.prune(step.cid)
        if isinstance(step, Merge):
            return self.merge(step.cid, step.first, step.second)
        if isinstance(step, Subst):
            return self.subst(step.cid, step.var)
        if isinstance(step, Split):
            return self.split(step.cid, step.index)
        raise TransformError(f"unknown step {step!r}")


def eliminate_var(c: Clause, var: str) -> Clause | None:
    for k, con in enumerate(c.constraints):
        if var not in con.var_names() or con.op != "=":
            continue
        if isinstance(con, BoolCmp):
            other = con.rhs if isinstance(con.lhs, Var) and con.lhs.name == var else con.lhs
            target = Var(var, Sort.BOOL)
            repl = other
        else:
            e = con.lhs - con.rhs
            coef = dict(e.terms)[var]
            if abs(coef) != 1:
                continue
            rest = LinExpr(tuple((v, cc) for v, cc in e.terms if v != var), e.const)
            repl_e = rest.scale(-coef)  # var = -rest/coef
            target = Var(var, Sort.INT)
            repl = _expr_term(repl_e)
        others = c.constraints[:k] + c.constraints[k + 1:]
        head_has = c.head is not None and target in c.head.vars()
        atom_has = any(target in a.vars() for a in c.body)
        if (head_has or atom_has) and repl is None:
            continue
        if repl is not None:
            new = Clause(c.head, others, c.body).substitute({target: repl})
        else:
            m = {var: repl_e}
            new_cs = []
            for o in others:
                if isinstance(o, Cmp):
                    new_cs.append(Cmp(o.op, o.lhs.substitute(m), o.rhs.substitute(m)))
                else:
                    new_cs.append(o)
            new = Clause(c.head, tuple(new_cs), c.body)
        cs = simplify_constraints(new.constraints)
        if cs is None:
            return None
        return Clause(new.head, cs, new.body, c.id)
    return None


def _expr_term(e: LinExpr):
    if not e.terms:
        return IntConst(e.const)
    if e.const == 0 and len(e.terms) == 1 and e.terms[0][1] == 1:
        return Var(e.terms[0][0], Sort.INT)
    return None


# ---------------------------------------------------------------------------
# script text

_DEFINE = re.compile(r"^define\s+(.*)$", re.S)


def parse_step(line: str, program: Program):
    line = line.strip()
    m = _DEFINE.match(line)
    if m:
        return _parse_define(m.group(1), program)
    words = line.split()
    if not words:
        raise TransformError("empty step")
    kw, args = words[0], words[1:]
    try:
        if kw == "unfold":
            cid, idx = args
            return Unfold(int(cid), int(idx))
        if kw == "fold":
            return Fold(int(args[0]), args[1], tuple(int(a) for a in args[2:]))
        if kw == "diff":
            if len(args) < 2:
                raise ValueError
            return DiffIntro(int(args[0]), tuple(args[1:]))
        if kw == "prune":
            (cid,) = args
            return Prune(int(cid))
        if kw == "merge":
            cid, i, j = args
            return Merge(int(cid), int(i), int(j))
        if kw == "subst":
            cid, v = args
            return Subst(int(cid), v)
        if kw == "split":
            cid, k = args
            return Split(int(cid), int(k))
    except (ValueError, IndexError):
        raise TransformError(f"malformed step: {line}") from None
    raise TransformError(f"unknown step keyword {kw!r}")


_HEAD = re.compile(r"^\s*([a-z][A-Za-z0-9_]*)\s*(\(([^)]*)\))?\s*:-(.*)$", re.S)


def _parse_define(text: str, program: Program) -> Define:
    m = _HEAD.match(text)
    if not m:
        raise TransformError(f"malformed define: {text}")
    name, has_args, arglist, body = m.group(1), m.group(2), m.group(3), m.group(4)
    goal = parse_clause("false :- " + body.strip(), program.decls)
    sorts = {v.name: v for v in goal.vars()}
    head_args = None
    if has_args is not None:
        names = [a.strip() for a in arglist.split(",") if a.strip()]
        try:
            head_args = [sorts[n] for n in names]
        except KeyError as e:
            raise TransformError(f"head variable {e.args[0]} does not occur in the body") from None
    if head_args is None:
        head_args = base_vars(goal.body, goal.constraints)
    clause = Clause(Atom(name, tuple(head_args)), goal.constraints, goal.body)
    return Define(name, clause)


def iter_script(text: str):
    """Yield (line number, step text) for non-blank, non-comment lines;
    a step may continue over several lines until a final '.' for define."""
    buf, start = "", 0
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].rstrip()
        if not line.strip():
            continue
        if not buf:
            start = n
        buf = (buf + " " + line.strip()).strip()
        if buf.startswith("define") and not buf.endswith("."):
            continue
        yield start, buf
        buf = ""
    if buf:
        yield start, buf


def replay(program: Program, script: str | list, session: Session | None = None) -> Session:
    """Apply script steps in order; raise StepFailed at the first failure."""
    s = session or Session(program)
    if isinstance(script, str):
        items = [text for _, text in iter_script(script)]
    else:
        items = list(script)
    for i, item in enumerate(items):
        try:
            step = parse_step(item, s.program) if isinstance(item, str) else item
            s.apply(step)
        except ChcError as e:
            raise StepFailed(i, e) from e
    return s


def reachable(program: Program) -> Program:
    """Goal clauses plus every clause for a predicate they (transitively) call."""
    need: list[str] = []
    for c in program.goals():
        for a in c.body:
            if a.pred not in need:
                need.append(a.pred)
    k = 0
    while k < len(need):
        for c in program.clauses_for(need[k]):
            for a in c.body:
                if a.pred not in need:
                    need.append(a.pred)
        k += 1
    keep = set(need)
    clauses = tuple(c for c in program.clauses if c.head is None or c.head.pred in keep)
    decls = tuple(d for d in program.decls if d.name in keep)
    return Program(decls, clauses)


__all__ = [
    "Define", "DiffIntro", "Definition", "EmptyBody", "Fold", "Merge", "NoDefiningClauses",
    "Prune", "SelectorOutOfRange", "Session", "Split", "StepFailed", "Subst", "TransformError",
    "Unfold", "UnknownClause", "base_vars", "eliminate_var", "fold_clause", "format_trace",
    "is_tautology", "iter_script", "make_definition_clause", "parse_step", "reachable",
    "replay", "simplify_constraints", "unfold_clause",
]
