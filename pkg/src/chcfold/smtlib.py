"""SMT-LIB 2.6 Horn-logic output."""

from __future__ import annotations

from .core import (
    Atom, BoolCmp, BoolConst, Clause, Cmp, Cons, IntConst, LinExpr, Nil, Program, Sort, Var,
)

_SMT_SORT = {Sort.INT: "Int", Sort.BOOL: "Bool", Sort.LIST: "IList"}


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _lin(e: LinExpr) -> str:
    parts = []
    for v, c in e.terms:
        parts.append(v if c == 1 else f"(* {_int(c)} {v})")
    if e.const or not parts:
        parts.append(_int(e.const))
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def _term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntConst):
        return _int(t.value)
    if isinstance(t, BoolConst):
        return "true" if t.value else "false"
    if isinstance(t, Nil):
        return "nil"
    if isinstance(t, Cons):
        return f"(cons {_term(t.head)} {_term(t.tail)})"
    raise TypeError(t)


_REL = {"=": "=", "=<": "<=", "<": "<", ">=": ">=", ">": ">"}


def _constraint(c) -> str:
    if isinstance(c, BoolCmp):
        eq = f"(= {_term(c.lhs)} {_term(c.rhs)})"
        return eq if c.op == "=" else f"(not {eq})"
    assert isinstance(c, Cmp)
    if c.op == "=\\=":
        return f"(not (= {_lin(c.lhs)} {_lin(c.rhs)}))"
    return f"({_REL[c.op]} {_lin(c.lhs)} {_lin(c.rhs)})"


def _atom(a: Atom) -> str:
    if not a.args:
        return a.pred
    return f"({a.pred} {' '.join(_term(t) for t in a.args)})"


def emit_clause(c: Clause) -> str:
    lits = [_constraint(x) for x in c.constraints] + [_atom(a) for a in c.body]
    head = "false" if c.head is None else _atom(c.head)
    if not lits:
        body = head
    else:
        cond = lits[0] if len(lits) == 1 else f"(and {' '.join(lits)})"
        body = f"(=> {cond} {head})"
    vs = c.vars()
    if not vs:
        return f"(assert {body})"
    binders = "".join(f"({v.name} {_SMT_SORT[v.sort]})" for v in vs)
    return f"(assert (forall ({binders}) {body}))"


def emit_smtlib(p: Program) -> str:
    lines = ["(set-logic HORN)"]
    if not p.is_adt_free() or any(Sort.LIST in d.sorts for d in p.decls):
        lines.append("(declare-datatypes ((IList 0)) (((nil) (cons (head Int) (tail IList)))))")
    for d in p.decls:
        sorts = " ".join(_SMT_SORT[s] for s in d.sorts)
        lines.append(f"(declare-fun {d.name} ({sorts}) Bool)")
    for c in p.clauses:
        lines.append(emit_clause(c))
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
