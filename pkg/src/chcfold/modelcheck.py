"""Box-bounded validation of candidate models, functionality of predicates
and lemma extraction from definitions."""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    BoolCmp, ChcError, Clause, Cmp, LinExpr, PredDecl, Program, Sort, Var,
)
from .formula import And, Bottom, Formula, Not, Or, Top, eval3, retype, substitute
from .solver import Search, SearchLimit
from .syntax import Model, ModelEntry

DEFAULT_BOX = (-3, 3)
DEFAULT_CAP = 10**7


class NotADTFree(ChcError):
    pass


class BoxTooLarge(ChcError):
    pass


@dataclass(frozen=True)
class Valid:
    def __str__(self) -> str:
        return "valid"


@dataclass(frozen=True)
class Counterexample:
    clause: Clause
    assignment: dict

    def __str__(self) -> str:
        vals = ", ".join(f"{k}: {_show(v)}" for k, v in sorted(self.assignment.items()))
        return f"clause {self.clause.id}: {{{vals}}}"


def _show(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


def entry_formula(entry: ModelEntry, sorts) -> Formula:
    """The entry's formula with boolean parameters typed as such."""
    names = {p: s for p, s in zip(entry.params, sorts)}
    return retype(entry.formula, names)


def instantiate(entry: ModelEntry, decl: PredDecl, args) -> Formula:
    if len(entry.params) != decl.arity:
        raise ChcError(f"model entry for {decl.name} has {len(entry.params)} parameters, "
                       f"predicate has {decl.arity}")
    f = entry_formula(entry, decl.sorts)
    sub = {Var(p, s): a for p, s, a in zip(entry.params, decl.sorts, args)}
    return substitute(f, sub)


def clause_conjuncts(clause: Clause, program: Program, model: Model) -> list[Formula]:
    parts: list[Formula] = list(clause.constraints)
    for a in clause.body:
        parts.append(instantiate(model.entry(a.pred), program.decl(a.pred), a.args))
    if clause.head is not None:
        h = clause.head
        parts.append(Not(instantiate(model.entry(h.pred), program.decl(h.pred), h.args)))
    return parts


def _domains(clause: Clause, box: tuple[int, int]) -> dict:
    ints = list(range(box[0], box[1] + 1))
    return {v.name: ([False, True] if v.sort is Sort.BOOL else ints) for v in clause.vars()}


def check_clause(clause: Clause, program: Program, model: Model,
                 box: tuple[int, int] = DEFAULT_BOX, cap: int = DEFAULT_CAP) -> dict | None:
    parts = clause_conjuncts(clause, program, model)
    search = Search(parts, _domains(clause, box), cap=cap)
    try:
        for sol in search.solutions():
            return sol
    except SearchLimit:
        raise BoxTooLarge(f"clause {clause.id} needs more than {cap} assignments") from None
    return None


def check_model(program: Program, model: Model, box: tuple[int, int] = DEFAULT_BOX,
                cap: int = DEFAULT_CAP):
    """Valid, or the counterexample with the lowest clause id."""
    if not program.is_adt_free():
        raise NotADTFree("the clauses still mention lists")
    for d in program.decls:
        model.entry(d.name)
    for clause in sorted(program.clauses, key=lambda c: (c.id is None, c.id or 0)):
        sol = check_clause(clause, program, model, box, cap)
        if sol is not None:
            return Counterexample(clause, sol)
    return Valid()


def revalidate(program: Program, model: Model, cex: Counterexample) -> bool:
    """Does the assignment really falsify the clause under the model?"""
    parts = clause_conjuncts(cex.clause, program, model)
    return all(eval3(p, cex.assignment) is True for p in parts)


# ---------------------------------------------------------------------------
# functionality


@dataclass(frozen=True)
class Functional:
    def __str__(self) -> str:
        return "functional"


@dataclass(frozen=True)
class Violation:
    inputs: tuple
    outputs: tuple[tuple, tuple]

    def __str__(self) -> str:
        return f"inputs {self.inputs} admit outputs {self.outputs[0]} and {self.outputs[1]}"


def _param_sorts(entry: ModelEntry) -> list[Sort]:
    boolish = set()
    from .formula import leaves
    for leaf in leaves(entry.formula):
        if isinstance(leaf, BoolCmp):
            boolish |= leaf.var_names()
    return [Sort.BOOL if p in boolish else Sort.INT for p in entry.params]


def check_functionality(model: Model, pred: str, modes, box: tuple[int, int] = DEFAULT_BOX,
                        sorts=None, cap: int = DEFAULT_CAP):
    entry = model.entry(pred)
    modes = tuple(modes)
    if len(modes) != len(entry.params):
        raise ChcError(f"{len(modes)} modes for {len(entry.params)} parameters of {pred}")
    sorts = list(sorts) if sorts is not None else _param_sorts(entry)
    f = entry_formula(entry, sorts)
    ints = list(range(box[0], box[1] + 1))
    doms = {p: ([False, True] if s is Sort.BOOL else ints) for p, s in zip(entry.params, sorts)}
    ins = [p for p, m in zip(entry.params, modes) if m == "in"]
    outs = [p for p, m in zip(entry.params, modes) if m == "out"]
    seen: dict[tuple, tuple] = {}
    try:
        for sol in Search([f], doms, cap=cap).solutions():
            i = tuple(sol[p] for p in ins)
            o = tuple(sol[p] for p in outs)
            prev = seen.setdefault(i, o)
            if prev != o:
                return Violation(i, (prev, o))
    except SearchLimit:
        raise BoxTooLarge(f"{pred} needs more than {cap} assignments") from None
    return Functional()


# ---------------------------------------------------------------------------
# lemmas


def _lin_text(e: LinExpr) -> str:
    out = ""
    for v, c in e.terms:
        mag = abs(c)
        mono = v if mag == 1 else f"{mag}*{v}"
        if not out:
            out = ("-" if c < 0 else "") + mono
        else:
            out += (" - " if c < 0 else " + ") + mono
    if e.const or not out:
        if not out:
            out = str(e.const)
        else:
            out += (" - " if e.const < 0 else " + ") + str(abs(e.const))
    return out


def _eq_text(c: Cmp) -> str:
    e = c.lhs - c.rhs
    for v, k in e.terms:
        if abs(k) != 1:
            continue
        rest = LinExpr(tuple((n, kk) for n, kk in e.terms if n != v), e.const).scale(-k)
        if rest.const >= 0 and all(kk > 0 for _, kk in rest.terms):
            return f"{v} = {_lin_text(rest)}"
    return f"{_lin_text(c.lhs)} = {_lin_text(c.rhs)}"


_OPS = {"=\\=": "≠", "=<": "=<", "<": "<", ">=": ">=", ">": ">"}


def formula_text(f: Formula) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Cmp):
        if f.op == "=":
            return _eq_text(f)
        return f"{_lin_text(f.lhs)} {_OPS[f.op]} {_lin_text(f.rhs)}"
    if isinstance(f, BoolCmp):
        return f"{f.lhs} {'=' if f.op == '=' else '≠'} {f.rhs}"
    if isinstance(f, And):
        return " ∧ ".join(_wrap(p, And) for p in f.parts)
    if isinstance(f, Or):
        return " ∨ ".join(_wrap(p, Or) for p in f.parts)
    return f"¬({formula_text(f.part)})"


def _wrap(f: Formula, parent) -> str:
    if isinstance(f, (And, Or)) and not isinstance(f, parent):
        return f"({formula_text(f)})"
    return formula_text(f)


def _flat(f: Formula) -> Formula:
    """Flatten nested conjunctions and disjunctions for display."""
    if isinstance(f, (And, Or)):
        parts = []
        for p in f.parts:
            p = _flat(p)
            if type(p) is type(f):
                parts.extend(p.parts)
            else:
                parts.append(p)
        return type(f)(tuple(parts))
    if isinstance(f, Not):
        return Not(_flat(f.part))
    return f


def lemma_formula(defn_clause: Clause, program: Program, model: Model) -> Formula:
    head = defn_clause.head
    decl = program.decl(head.pred)
    return instantiate(model.entry(head.pred), decl, head.args)


def extract_lemma(defn_clause: Clause, program: Program, model: Model) -> str:
    """Render the definition as an implication whose conclusion is the model formula."""
    concl = _flat(lemma_formula(defn_clause, program, model))
    vs = []
    for a in defn_clause.body:
        for v in a.vars():
            if v not in vs:
                vs.append(v)
    for c in defn_clause.constraints:
        for v in sorted(c.vars(), key=lambda v: v.name):
            if v not in vs:
                vs.append(v)
    premise = [formula_text(c) for c in defn_clause.constraints] + [str(a) for a in defn_clause.body]
    return (f"∀{','.join(v.name for v in vs)}. {' ∧ '.join(premise) or 'true'} → "
            f"({formula_text(concl)})")


def lemma_holds(program: Program, defn_clause: Clause, model: Model, universe) -> bool:
    """Check the lemma on every ground instance of the definition in the bounded model."""
    from .evaluator import least_model
    head = defn_clause.head
    decl = program.decl(head.pred)
    base = Program(program.decls,
                   tuple(c for c in program.clauses if c.head is not None
                         and c.head.pred != head.pred) + (defn_clause,))
    ext = least_model(base, universe)
    f = entry_formula(model.entry(head.pred), decl.sorts)
    params = model.entry(head.pred).params
    for vals in ext[head.pred]:
        if eval3(f, dict(zip(params, vals))) is not True:
            return False
    return True


__all__ = [
    "BoxTooLarge", "Counterexample", "Functional", "NotADTFree", "Valid", "Violation",
    "check_functionality", "check_model", "extract_lemma", "lemma_holds", "revalidate",
]
