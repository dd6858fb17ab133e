"""Access to the bundled benchmark corpus: the ten sorting problems with their
initial and transformed clause sets, solver models, hint scripts and the
shipped mutations."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .core import Program
from .evaluator import Universe
from .syntax import Model, parse_model, parse_program

PROBLEMS = (
    "01_insertionsort_perm",
    "02_insertionsort_ordered",
    "03_insertionsort_length",
    "04_insertionsort_sum",
    "05_selectionsort_perm",
    "06_selectionsort_ordered",
    "07_selectionsort_length",
    "08_quicksort_perm",
    "09_quicksort_sum",
    "10_mergesort_sum",
)

KINDS = ("initial.chc", "transformed.chc", "model.pl")


def _data():
    return resources.files("chcfold") / "data"


def path(name: str):
    return _data() / name


def read(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def has(name: str) -> bool:
    return path(name).is_file()


def initial(problem: str) -> Program:
    return parse_program(read(f"{problem}.initial.chc"))


def transformed(problem: str) -> Program:
    return parse_program(read(f"{problem}.transformed.chc"))


def model(problem: str) -> Model:
    return parse_model(read(f"{problem}.model.pl"))


def hints(problem: str) -> str | None:
    name = f"{problem}.hints"
    return read(name) if has(name) else None


def universe(problem: str) -> Universe:
    """The bounded universe used for equisatisfiability checks: MergeSort
    halves lists with arithmetic on lengths, so it gets a narrower range."""
    return Universe(0, 1, 3) if "mergesort" in problem else Universe(0, 2, 3)


def strict(problem: str) -> bool:
    # MergeSort's length arithmetic leaves the integer range near the bound
    return "mergesort" not in problem


@dataclass(frozen=True)
class ModelMutation:
    problem: str
    line: int       # 1-based
    column: int     # 1-based start of the constant
    old: str
    new: str
    clause: int     # id of the first clause falsified

    def apply(self, text: str) -> str:
        lines = text.split("\n")
        row = lines[self.line - 1]
        start = self.column - 1
        if row[start:start + len(self.old)] != self.old:
            raise ValueError(f"{self.problem}:{self.line}:{self.column} does not hold {self.old}")
        lines[self.line - 1] = row[:start] + self.new + row[start + len(self.old):]
        return "\n".join(lines)

    def __str__(self) -> str:
        return f"{self.problem}:{self.line}:{self.column} {self.old}->{self.new}"


def _rows(name: str):
    for raw in read(name).splitlines():
        line = raw.strip()
        if line and not line.startswith("%"):
            yield line


def model_mutations() -> list[ModelMutation]:
    out = []
    for line in _rows("model_mutations.txt"):
        p, ln, col, old, new, cid = line.split()
        out.append(ModelMutation(p, int(ln), int(col), old, new, int(cid)))
    return out


_GOAL = re.compile(r"^false\s*:-[^.]*\.", re.M)


def goal_mutations() -> dict[str, str]:
    out = {}
    for line in _rows("goal_mutations.txt"):
        p, goal = (x.strip() for x in line.split("|", 1))
        out[p] = goal
    return out


def negated(problem: str) -> Program:
    """The initial program with its goal replaced by the shipped negation."""
    text, n = _GOAL.subn(goal_mutations()[problem], read(f"{problem}.initial.chc"))
    if n != 1:
        raise ValueError(f"{problem} has {n} goal clauses")
    return parse_program(text)


__all__ = [
    "KINDS", "ModelMutation", "PROBLEMS", "goal_mutations", "hints", "initial", "model",
    "model_mutations", "negated", "read", "strict", "transformed", "universe",
]
