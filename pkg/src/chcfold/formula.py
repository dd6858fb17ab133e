"""Quantifier-free boolean combinations of constraints, with 3-valued evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .core import BoolCmp, Cmp, Constraint, Sort, Substitution, Var


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        return "(" + ", ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        return "(" + "; ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Not:
    part: "Formula"

    def __str__(self) -> str:
        return f"\\+({self.part})"


Formula = Union[Top, Bottom, And, Or, Not, Cmp, BoolCmp]


def conj(parts) -> Formula:
    parts = tuple(parts)
    if not parts:
        return Top()
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, (Cmp, BoolCmp)):
        return f.var_names()
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    if isinstance(f, Not):
        return free_vars(f.part)
    return set()


def leaves(f: Formula):
    if isinstance(f, (Cmp, BoolCmp)):
        yield f
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from leaves(p)
    elif isinstance(f, Not):
        yield from leaves(f.part)


def substitute(f: Formula, s: Substitution) -> Formula:
    if isinstance(f, (Cmp, BoolCmp)):
        return f.substitute(s)
    if isinstance(f, And):
        return And(tuple(substitute(p, s) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, s) for p in f.parts))
    if isinstance(f, Not):
        return Not(substitute(f.part, s))
    return f


def retype(f: Formula, sorts: Mapping[str, Sort]) -> Formula:
    """Turn integer comparisons over boolean-sorted variables into BoolCmp."""
    if isinstance(f, Cmp):
        names = f.var_names()
        if names and all(sorts.get(n) is Sort.BOOL for n in names):
            sides = []
            for e in (f.lhs, f.rhs):
                if len(e.terms) == 1 and e.terms[0][1] == 1 and e.const == 0:
                    sides.append(Var(e.terms[0][0], Sort.BOOL))
                else:
                    raise ValueError(f"boolean variable in arithmetic: {f}")
            if f.op not in ("=", "=\\="):
                raise ValueError(f"ordering on booleans: {f}")
            return BoolCmp(f.op, sides[0], sides[1])
        return f
    if isinstance(f, And):
        return And(tuple(retype(p, sorts) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(retype(p, sorts) for p in f.parts))
    if isinstance(f, Not):
        return Not(retype(f.part, sorts))
    return f


def eval3(f: Formula, env: Mapping[str, object]) -> bool | None:
    """True / False, or None when unassigned variables decide the outcome."""
    if isinstance(f, (Cmp, BoolCmp)):
        for n in f.var_names():
            if n not in env:
                return None
        return f.evaluate(env)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, And):
        result: bool | None = True
        for p in f.parts:
            r = eval3(p, env)
            if r is False:
                return False
            if r is None:
                result = None
        return result
    if isinstance(f, Or):
        result = False
        for p in f.parts:
            r = eval3(p, env)
            if r is True:
                return True
            if r is None:
                result = None
        return result
    r = eval3(f.part, env)
    return None if r is None else not r


def flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out: list[Formula] = []
        for p in f.parts:
            out.extend(flatten_and(p))
        return out
    if isinstance(f, Top):
        return []
    return [f]


__all__ = [
    "And", "Bottom", "Constraint", "Formula", "Not", "Or", "Top", "conj", "eval3",
    "flatten_and", "free_vars", "leaves", "retype", "substitute",
]
