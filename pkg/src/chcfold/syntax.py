"""Reader and printer for the Prolog-like clause notation and for solver
models written in the same style."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .core import (
    Atom, BoolCmp, BoolConst, ChcError, Clause, Cmp, Cons, IntConst, LinExpr, NIL,
    PredDecl, Program, Sort, Var, default_modes, unify,
)
from .formula import And, Bottom, Formula, Not, Or, Top, free_vars

# ---------------------------------------------------------------------------
# errors


class ChcSyntaxError(ChcError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line, self.col = line, col


class UndeclaredPredicate(ChcSyntaxError):
    pass


class ArityMismatch(ChcSyntaxError):
    pass


class SortError(ChcSyntaxError):
    pass


class ParamMismatch(ChcSyntaxError):
    pass


class MissingPredicate(ChcError):
    pass


# ---------------------------------------------------------------------------
# tokens

_TOKEN = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<op>:-|=\\=|=<|>=|\\\+|[=<>+\-*(),\[\]|;.])
  | (?P<num>\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ChcSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


RELOPS = ("=", "=\\=", "=<", "<", ">=", ">")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Tok | None = None, cls=ChcSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def take(self, text: str | None = None, kind: str | None = None) -> Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind) \
                or t.kind == "eof" and text != "":
            want = text or kind
            raise self.error(f"expected {want!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    # raw terms: ('var', n) ('int', v) ('bool', v) ('nil',) ('cons', h, t)
    #            ('add', a, b) ('sub', a, b) ('neg', a) ('mul', a, b)

    def expr(self):
        left = self.product()
        while self.at("+") or self.at("-"):
            op = self.take().text
            right = self.product()
            left = ("add" if op == "+" else "sub", left, right)
        return left

    def product(self):
        left = self.unary()
        while self.at("*"):
            self.take()
            left = ("mul", left, self.unary())
        return left

    def unary(self):
        if self.at("-"):
            self.take()
            inner = self.unary()
            if inner[0] == "int":
                return ("int", -inner[1])
            return ("neg", inner)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return ("int", int(t.text))
        if t.kind == "var":
            self.i += 1
            return ("var", t.text)
        if t.kind == "name" and t.text in ("true", "false"):
            self.i += 1
            return ("bool", t.text == "true")
        if self.at("("):
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if self.at("["):
            return self.list_term()
        raise self.error(f"unexpected {t.text or 'end of input'!r} in term")

    def list_term(self):
        self.take("[")
        if self.at("]"):
            self.take()
            return ("nil",)
        items = [self.expr()]
        while self.at(","):
            self.take()
            items.append(self.expr())
        tail = ("nil",)
        if self.at("|"):
            self.take()
            tail = self.expr()
        self.take("]")
        for it in reversed(items):
            tail = ("cons", it, tail)
        return tail

    def atom(self):
        t = self.take(kind="name")
        args = []
        if self.at("("):
            self.take()
            if not self.at(")"):
                args.append(self.expr())
                while self.at(","):
                    self.take()
                    args.append(self.expr())
            self.take(")")
        return (t.text, args, t)

    def literal(self):
        t = self.tok
        if t.kind == "name" and t.text not in ("true", "false"):
            return ("atom",) + self.atom()
        lhs = self.expr()
        if not (self.tok.kind == "op" and self.tok.text in RELOPS):
            raise self.error("expected a comparison operator")
        op = self.take().text
        rhs = self.expr()
        return ("cmp", op, lhs, rhs, t)


# ---------------------------------------------------------------------------
# sort inference and clause construction


def _raw_vars(r) -> Iterable[str]:
    if r[0] == "var":
        yield r[1]
    elif r[0] in ("cons", "add", "sub", "mul"):
        yield from _raw_vars(r[1])
        yield from _raw_vars(r[2])
    elif r[0] == "neg":
        yield from _raw_vars(r[1])


def _is_listy(r) -> bool:
    return r[0] in ("nil", "cons")


def _is_arith(r) -> bool:
    return r[0] in ("int", "add", "sub", "mul", "neg")


class _Sorts:
    def __init__(self, where: Tok):
        self.s: dict[str, Sort] = {}
        self.where = where

    def fail(self, msg):
        return SortError(msg, self.where.line, self.where.col)

    def set(self, name: str, sort: Sort):
        old = self.s.get(name)
        if old is not None and old is not sort:
            raise self.fail(f"variable {name} used as both {old} and {sort}")
        self.s[name] = sort

    def assign(self, r, sort: Sort):
        kind = r[0]
        if kind == "var":
            self.set(r[1], sort)
        elif kind in ("nil", "cons"):
            if sort is not Sort.LIST:
                raise self.fail(f"list term where {sort} expected")
            if kind == "cons":
                self.assign(r[1], Sort.INT)
                self.assign(r[2], Sort.LIST)
        elif kind == "bool":
            if sort is not Sort.BOOL:
                raise self.fail(f"boolean constant where {sort} expected")
        else:
            if sort is not Sort.INT:
                raise self.fail(f"integer expression where {sort} expected")
            for v in _raw_vars(r):
                self.set(v, Sort.INT)


def _lin(r, where: Tok) -> LinExpr:
    k = r[0]
    if k == "int":
        return LinExpr.num(r[1])
    if k == "var":
        return LinExpr.var(r[1])
    if k == "add":
        return _lin(r[1], where) + _lin(r[2], where)
    if k == "sub":
        return _lin(r[1], where) - _lin(r[2], where)
    if k == "neg":
        return -_lin(r[1], where)
    if k == "mul":
        a, b = _lin(r[1], where), _lin(r[2], where)
        if a.is_const():
            return b.scale(a.const)
        if b.is_const():
            return a.scale(b.const)
        raise ChcSyntaxError("nonlinear product", where.line, where.col)
    raise SortError("non-integer term in arithmetic", where.line, where.col)


def _term(r, sorts: dict[str, Sort], where: Tok):
    k = r[0]
    if k == "var":
        return Var(r[1], sorts.get(r[1], Sort.INT))
    if k == "int":
        return IntConst(r[1])
    if k == "bool":
        return BoolConst(r[1])
    if k == "nil":
        return NIL
    if k == "cons":
        return Cons(_term(r[1], sorts, where), _term(r[2], sorts, where))
    raise ChcSyntaxError("arithmetic is not allowed as a predicate argument", where.line, where.col)


def _build_clause(head, lits, decls: dict[str, PredDecl], where: Tok, cid: int) -> Clause:
    sorts = _Sorts(where)
    atoms = ([head] if head is not None else []) + [l[1:] for l in lits if l[0] == "atom"]
    cmps = [l for l in lits if l[0] == "cmp"]
    for name, args, tok in atoms:
        d = decls.get(name)
        if d is None:
            raise UndeclaredPredicate(f"predicate {name} is not declared", tok.line, tok.col)
        if len(args) != d.arity:
            raise ArityMismatch(f"{name} expects {d.arity} arguments, got {len(args)}",
                                tok.line, tok.col)
        for a, s in zip(args, d.sorts):
            sorts.where = tok
            sorts.assign(a, s)
    pairs = []
    for _, op, lhs, rhs, tok in cmps:
        sorts.where = tok
        if _is_listy(lhs) or _is_listy(rhs):
            if op != "=":
                raise SortError("only equality is allowed between lists", tok.line, tok.col)
            sorts.assign(lhs, Sort.LIST)
            sorts.assign(rhs, Sort.LIST)
        elif lhs[0] == "bool" or rhs[0] == "bool":
            if op not in ("=", "=\\="):
                raise SortError("ordering on booleans", tok.line, tok.col)
            sorts.assign(lhs, Sort.BOOL)
            sorts.assign(rhs, Sort.BOOL)
        elif _is_arith(lhs) or _is_arith(rhs) or op not in ("=", "=\\="):
            sorts.assign(lhs, Sort.INT)
            sorts.assign(rhs, Sort.INT)
        else:
            pairs.append((lhs[1], rhs[1], op, tok))
    changed = True
    while changed:
        changed = False
        for a, b, op, tok in pairs:
            sa, sb = sorts.s.get(a), sorts.s.get(b)
            if sa is None and sb is not None:
                sorts.set(a, sb)
                changed = True
            elif sb is None and sa is not None:
                sorts.set(b, sa)
                changed = True
            elif sa is not None and sa is not sb:
                raise SortError(f"{a} and {b} have different sorts", tok.line, tok.col)
            if op != "=" and sorts.s.get(a) is Sort.LIST:
                raise SortError("disequality between lists", tok.line, tok.col)
    s = sorts.s
    head_atom = None
    if head is not None:
        head_atom = Atom(head[0], tuple(_term(a, s, head[2]) for a in head[1]))
    body = []
    for name, args, tok in atoms[1 if head is not None else 0:]:
        body.append(Atom(name, tuple(_term(a, s, tok) for a in args)))
    constraints = []
    list_eqs = []
    for _, op, lhs, rhs, tok in cmps:
        lt = lhs[0] == "var" and s.get(lhs[1])
        if _is_listy(lhs) or _is_listy(rhs) or lt is Sort.LIST:
            list_eqs.append((_term(lhs, s, tok), _term(rhs, s, tok), tok))
        elif lhs[0] == "bool" or rhs[0] == "bool" or lt is Sort.BOOL:
            constraints.append(BoolCmp(op, _term(lhs, s, tok), _term(rhs, s, tok)))
        else:
            constraints.append(Cmp(op, _lin(lhs, tok), _lin(rhs, tok)))
    clause = Clause(head_atom, tuple(constraints), tuple(body), cid)
    if list_eqs:
        # list equations are solved away by unification
        sub: dict | None = {}
        for a, b, tok in list_eqs:
            sub = unify(a, b, sub)
            if sub is None:
                raise SortError("unsatisfiable list equation", tok.line, tok.col)
        clause = clause.substitute(sub)
    return clause


_SORT_NAMES = {"int": Sort.INT, "bool": Sort.BOOL}


def _parse_sort(p: _Parser) -> Sort:
    t = p.take(kind="name")
    if t.text == "list":
        p.take("(")
        inner = p.take(kind="name")
        p.take(")")
        if inner.text != "int":
            raise p.error(f"unsupported list element sort {inner.text}", inner)
        return Sort.LIST
    if t.text not in _SORT_NAMES:
        raise p.error(f"unknown sort {t.text}", t)
    return _SORT_NAMES[t.text]


def _parse_directive(p: _Parser, decls: dict, modes: dict):
    kw = p.take(kind="name")
    name_tok = p.take(kind="name")
    items = []
    if p.at("("):
        p.take()
        if not p.at(")"):
            while True:
                if kw.text == "pred":
                    items.append(_parse_sort(p))
                else:
                    m = p.take(kind="name")
                    if m.text not in ("in", "out"):
                        raise p.error(f"mode must be in or out, not {m.text}", m)
                    items.append(m.text)
                if not p.at(","):
                    break
                p.take()
        p.take(")")
    p.take(".")
    if kw.text == "pred":
        if name_tok.text in decls:
            raise p.error(f"predicate {name_tok.text} declared twice", name_tok)
        decls[name_tok.text] = (tuple(items), name_tok)
    elif kw.text == "mode":
        modes[name_tok.text] = (tuple(items), name_tok)
    else:
        raise p.error(f"unknown directive {kw.text}", kw)


def parse_program(text: str) -> Program:
    p = _Parser(text)
    raw_decls: dict = {}
    modes: dict = {}
    raw_clauses = []
    while p.tok.kind != "eof":
        if p.at(":-"):
            p.take()
            _parse_directive(p, raw_decls, modes)
            continue
        start = p.tok
        if p.at("false"):
            p.take()
            head = None
        else:
            head = p.atom()
        lits = []
        if p.at(":-"):
            p.take()
            lits.append(p.literal())
            while p.at(","):
                p.take()
                lits.append(p.literal())
        p.take(".")
        raw_clauses.append((head, lits, start))
    decls: dict[str, PredDecl] = {}
    for name, (sorts, tok) in raw_decls.items():
        m = ()
        if name in modes:
            m = modes[name][0]
            if len(m) != len(sorts):
                raise ArityMismatch(f"mode of {name} has {len(m)} entries", *_pos(modes[name][1]))
        decls[name] = PredDecl(name, sorts, m)
    for name, (_, tok) in modes.items():
        if name not in decls:
            raise UndeclaredPredicate(f"mode for undeclared predicate {name}", tok.line, tok.col)
    clauses = [_build_clause(h, lits, decls, tok, i + 1)
               for i, (h, lits, tok) in enumerate(raw_clauses)]
    return Program(tuple(decls.values()), tuple(clauses))


def _pos(tok: Tok) -> tuple[int, int]:
    return tok.line, tok.col


def parse_clause(text: str, decls: Iterable[PredDecl], cid: int | None = None) -> Clause:
    """Parse a single clause (with or without the final dot) against known declarations."""
    text = text.strip()
    if not text.endswith("."):
        text += "."
    p = _Parser(text)
    start = p.tok
    head = None
    if p.at("false"):
        p.take()
    else:
        head = p.atom()
    lits = []
    if p.at(":-"):
        p.take()
        lits.append(p.literal())
        while p.at(","):
            p.take()
            lits.append(p.literal())
    p.take(".")
    if p.tok.kind != "eof":
        raise p.error("trailing input after clause")
    return _build_clause(head, lits, {d.name: d for d in decls}, start, cid)


# ---------------------------------------------------------------------------
# printing


def format_constraint(c) -> str:
    return str(c)


def format_clause(c: Clause) -> str:
    head = "false" if c.head is None else str(c.head)
    body = [str(x) for x in c.constraints] + [str(a) for a in c.body]
    if not body:
        return head + "."
    return head + " :- " + ", ".join(body) + "."


def format_decl(d: PredDecl) -> list[str]:
    sorts = ",".join(str(s) for s in d.sorts)
    lines = [f":- pred {d.name}({sorts})." if d.sorts else f":- pred {d.name}."]
    if d.modes != default_modes(d.arity):
        lines.append(f":- mode {d.name}({','.join(d.modes)}).")
    return lines


def print_program(p: Program) -> str:
    lines: list[str] = []
    for d in p.decls:
        lines.extend(format_decl(d))
    if p.decls and p.clauses:
        lines.append("")
    for c in p.clauses:
        lines.append(format_clause(c))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelEntry:
    params: tuple[str, ...]
    formula: Formula

    def __str__(self) -> str:
        return format_formula(self.formula)


@dataclass(frozen=True)
class Model:
    entries: dict = field(default_factory=dict)

    def __contains__(self, pred: str) -> bool:
        return pred in self.entries

    def entry(self, pred: str) -> ModelEntry:
        try:
            return self.entries[pred]
        except KeyError:
            raise MissingPredicate(f"model has no entry for {pred}") from None

    def completed(self, program: Program) -> tuple["Model", list[str]]:
        """Fill in ``true`` for predicates the model omits; returns warnings."""
        entries = dict(self.entries)
        warnings = []
        for d in program.decls:
            if d.name not in entries:
                entries[d.name] = ModelEntry(tuple(f"A{i}" for i in range(d.arity)), Top())
                warnings.append(f"no model entry for {d.name}; assuming true")
        return Model(entries), warnings


def format_formula(f: Formula) -> str:
    return str(f)


def print_model(m: Model) -> str:
    lines = []
    for pred, e in m.entries.items():
        head = f"{pred}({','.join(e.params)})" if e.params else pred
        lines.append(f"{head} :- {format_formula(e.formula)}.")
    return "\n".join(lines) + ("\n" if lines else "")


class _ModelParser(_Parser):
    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.at(";"):
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unit()]
        while self.at(","):
            self.take()
            parts.append(self.unit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unit(self) -> Formula:
        if self.at("\\+"):
            self.take()
            return Not(self.unit())
        if self.at("true") and not self._relop_after(1):
            self.take()
            return Top()
        if self.at("false") and not self._relop_after(1):
            self.take()
            return Bottom()
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except ChcSyntaxError:
                self.i = save
            self.take("(")
            f = self.formula()
            self.take(")")
            return f
        return self.comparison()

    def _relop_after(self, k: int) -> bool:
        t = self.peek(k)
        return t.kind == "op" and t.text in RELOPS

    def comparison(self) -> Formula:
        t = self.tok
        lhs = self.expr()
        if not (self.tok.kind == "op" and self.tok.text in RELOPS):
            raise self.error("expected a comparison operator")
        op = self.take().text
        rhs = self.expr()
        if lhs[0] == "bool" or rhs[0] == "bool":
            if op not in ("=", "=\\="):
                raise SortError("ordering on booleans", t.line, t.col)

            def bterm(r):
                if r[0] == "bool":
                    return BoolConst(r[1])
                if r[0] == "var":
                    return Var(r[1], Sort.BOOL)
                raise SortError("arithmetic compared with a boolean", t.line, t.col)
            return BoolCmp(op, bterm(lhs), bterm(rhs))
        return Cmp(op, _lin(lhs, t), _lin(rhs, t))


def parse_model(text: str) -> Model:
    p = _ModelParser(text)
    entries: dict[str, ModelEntry] = {}
    while p.tok.kind != "eof":
        name, args, tok = p.atom()
        params = []
        for a in args:
            if a[0] != "var":
                raise p.error("model head arguments must be variables", tok)
            params.append(a[1])
        if len(set(params)) != len(params):
            raise ParamMismatch(f"repeated parameter in {name}", tok.line, tok.col)
        if p.at(":-"):
            p.take()
            f = p.formula()
        else:
            f = Top()
        p.take(".")
        extra = free_vars(f) - set(params)
        if extra:
            raise ParamMismatch(f"{name}: formula uses {', '.join(sorted(extra))} "
                                "which are not parameters", tok.line, tok.col)
        if name in entries:
            raise ChcSyntaxError(f"two model entries for {name}", tok.line, tok.col)
        entries[name] = ModelEntry(tuple(params), f)
    return Model(entries)


__all__ = [
    "ArityMismatch", "ChcSyntaxError", "MissingPredicate", "Model", "ModelEntry", "ParamMismatch",
    "SortError", "UndeclaredPredicate", "format_clause", "format_formula", "parse_clause",
    "parse_model", "parse_program", "print_model", "print_program", "tokenize",
]
