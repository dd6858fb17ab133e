"""Command-line front end.

Exit codes: 0 success, valid or agreement; 1 a negative verdict; 2 usage or
input errors; 3 the external solver failed or timed out.
"""

from __future__ import annotations

import argparse
import os
import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .core import ChcError
from .elim import DEFAULT_BUDGET, DEFAULT_ROUNDS, BudgetExhausted, Stuck, Success, eliminate
from .evaluator import Agree, FalseDerived, Universe, bounded_sat, compare
from .modelcheck import DEFAULT_BOX, Valid, check_model
from .smtlib import emit_smtlib
from .syntax import Model, parse_model, parse_program, print_program
from .transform import format_trace, reachable, replay

OK, NEGATIVE, USAGE, SOLVER = 0, 1, 2, 3
DEFAULT_TIMEOUT = 120.0


class SolverTimeout(ChcError):
    pass


class SolverUnparseable(ChcError):
    def __init__(self, msg: str, raw: str):
        super().__init__(msg)
        self.raw = raw


@dataclass(frozen=True)
class SolverResult:
    verdict: str            # "sat" or "unsat"
    model: Model | None
    raw: str


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load(path: str):
    return parse_program(_read(path))


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _universe(args) -> Universe:
    return Universe(args.int_lo, args.int_hi, args.max_len)


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    try:
        p = _load(args.file)
    except ChcError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return NEGATIVE
    goals = sum(1 for c in p.clauses if c.head is None)
    print(f"{args.file}: {len(p.decls)} predicates, {len(p.clauses)} clauses, {goals} goals")
    if args.print:
        sys.stdout.write(print_program(p))
    return OK


def cmd_transform(args) -> int:
    p = _load(args.file)
    hints = _read(args.hints) if args.hints else None
    r = eliminate(p, budget=args.budget, hints=hints, rounds=args.rounds)
    if args.trace:
        Path(args.trace).write_text(format_trace(r.session.trace), encoding="utf-8")
    if isinstance(r, Success):
        _write(print_program(r.program), args.out)
        return OK
    if isinstance(r, BudgetExhausted):
        print(f"budget of {args.budget} steps exhausted; open clauses: {r.worklist}",
              file=sys.stderr)
    elif isinstance(r, Stuck):
        print(f"stuck at clause {r.clause.id}: {r.reason}", file=sys.stderr)
    if args.partial:
        _write(print_program(reachable(r.session.program)), args.partial)
    return NEGATIVE


def cmd_replay(args) -> int:
    p = _load(args.file)
    s = replay(p, _read(args.script))
    _write(print_program(reachable(s.program) if args.reachable else s.program), args.out)
    return OK


def cmd_emit(args) -> int:
    _write(emit_smtlib(_load(args.file)), args.out)
    return OK


def cmd_check_model(args) -> int:
    p = _load(args.clauses)
    m, warnings = parse_model(_read(args.model)).completed(p)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    r = check_model(p, m, tuple(args.box))
    print(r)
    return OK if isinstance(r, Valid) else NEGATIVE


def cmd_eval(args) -> int:
    r = bounded_sat(_load(args.file), _universe(args), strict=not args.lenient)
    print(r)
    return NEGATIVE if isinstance(r, FalseDerived) else OK


def cmd_compare(args) -> int:
    r = compare(_load(args.first), _load(args.second), _universe(args), strict=not args.lenient)
    print(r)
    return OK if isinstance(r, Agree) else NEGATIVE


def solve(smt: str, template: str, timeout: float) -> SolverResult:
    """Run an external Horn solver; ``{file}`` in the template names the script."""
    with tempfile.TemporaryDirectory() as tmp:
        f = Path(tmp) / "input.smt2"
        f.write_text(smt, encoding="utf-8")
        argv = [a.replace("{file}", str(f)) for a in shlex.split(template)]
        if "{file}" not in template:
            argv.append(str(f))
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise SolverTimeout(f"no answer within {timeout:g} s") from None
        except OSError as e:
            raise SolverUnparseable(f"cannot run {argv[0]}: {e}", "") from None
    raw = proc.stdout
    lines = [ln for ln in raw.splitlines() if ln.strip()]
    if not lines or lines[0].strip() not in ("sat", "unsat"):
        raise SolverUnparseable("solver printed neither sat nor unsat", raw + proc.stderr)
    verdict = lines[0].strip()
    model = None
    if verdict == "sat" and len(lines) > 1:
        try:
            model = parse_model("\n".join(lines[1:]))
        except ChcError:
            model = None            # not Prolog-style; the raw text is kept
    return SolverResult(verdict, model, raw)


def cmd_solve(args) -> int:
    template = args.solver_cmd or os.environ.get("CHC_SOLVER_CMD")
    if not template:
        print("no solver command: pass --solver-cmd or set CHC_SOLVER_CMD", file=sys.stderr)
        return USAGE
    try:
        r = solve(emit_smtlib(_load(args.file)), template, args.timeout)
    except SolverTimeout as e:
        print(f"timeout: {e}")
        return SOLVER
    except SolverUnparseable as e:
        print(f"solver failure: {e}", file=sys.stderr)
        if e.raw:
            sys.stderr.write(e.raw)
        return SOLVER
    print(r.verdict)
    if r.verdict == "sat":
        rest = r.raw.split("sat", 1)[1].strip()
        if rest:
            print(rest)
    return OK if r.verdict == "sat" else NEGATIVE


# ---------------------------------------------------------------------------
# argument parsing


def _bounds(sp):
    sp.add_argument("--int-lo", type=int, default=0)
    sp.add_argument("--int-hi", type=int, default=2)
    sp.add_argument("--max-len", type=int, default=3)
    sp.add_argument("--lenient", action="store_true",
                    help="let arithmetic leave the integer range instead of failing")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chcfold",
                                 description="Remove list arguments from constrained Horn clauses.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="check a clause file")
    sp.add_argument("file")
    sp.add_argument("--print", action="store_true", help="print the normalized program")
    sp.set_defaults(run=cmd_parse)

    sp = sub.add_parser("transform", help="eliminate lists")
    sp.add_argument("file")
    sp.add_argument("--hints", help="step script replayed before the automatic search")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS,
                    help="constructor unfolding rounds after each definition unfold")
    sp.add_argument("--out")
    sp.add_argument("--trace", help="write the step trace here")
    sp.add_argument("--partial", help="on failure, write the reachable clauses here")
    sp.set_defaults(run=cmd_transform)

    sp = sub.add_parser("replay", help="apply a step script")
    sp.add_argument("file")
    sp.add_argument("script")
    sp.add_argument("--out")
    sp.add_argument("--reachable", action="store_true", help="keep only clauses reachable from goals")
    sp.set_defaults(run=cmd_replay)

    sp = sub.add_parser("emit", help="write SMT-LIB HORN")
    sp.add_argument("file")
    sp.add_argument("--out")
    sp.set_defaults(run=cmd_emit)

    sp = sub.add_parser("check-model", help="validate a model on list-free clauses")
    sp.add_argument("clauses")
    sp.add_argument("model")
    sp.add_argument("--box", type=int, nargs=2, default=list(DEFAULT_BOX), metavar=("LO", "HI"))
    sp.set_defaults(run=cmd_check_model)

    sp = sub.add_parser("eval", help="bounded least model")
    sp.add_argument("file")
    _bounds(sp)
    sp.set_defaults(run=cmd_eval)

    sp = sub.add_parser("compare", help="compare two programs on a bounded universe")
    sp.add_argument("first")
    sp.add_argument("second")
    _bounds(sp)
    sp.set_defaults(run=cmd_compare)

    sp = sub.add_parser("solve", help="run an external Horn solver")
    sp.add_argument("file")
    sp.add_argument("--solver-cmd", help="command template; {file} is the SMT-LIB script")
    sp.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    sp.set_defaults(run=cmd_solve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.run(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except (ChcError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
