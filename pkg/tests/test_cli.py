import shlex
import shutil
import sys

import pytest

from chcfold import fixtures
from chcfold.cli import NEGATIVE, OK, SOLVER, USAGE, SolverTimeout, SolverUnparseable, main, solve
from chcfold.equiv import variant_equal
from chcfold.syntax import parse_program

SAT = ":- pred p(int).\np(0).\np(X) :- X=Y+1, p(Y), Y<3.\nfalse :- p(X), X<0.\n"
UNSAT = ":- pred p(int).\np(0).\nfalse :- p(X), X=0.\n"


@pytest.fixture
def files(tmp_path):
    def put(name, text):
        f = tmp_path / name
        f.write_text(text, encoding="utf-8")
        return str(f)
    return put


def _data(name):
    return str(fixtures.path(name))


def test_parse(capsys):
    assert main(["parse", _data("01_insertionsort_perm.initial.chc")]) == OK
    assert "3 predicates, 9 clauses, 1 goals" in capsys.readouterr().out


def test_parse_reports_errors(files, capsys):
    f = files("bad.chc", ":- pred p(int).\np(X :- X>0.\n")
    assert main(["parse", f]) == NEGATIVE
    assert "2" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == USAGE
    assert main(["parse", "/no/such/file.chc"]) == USAGE
    assert main(["nosuch"]) == USAGE


def test_transform_with_hints(tmp_path):
    out, trace = tmp_path / "out.chc", tmp_path / "trace.txt"
    rc = main(["transform", _data("08_quicksort_perm.initial.chc"),
               "--hints", _data("08_quicksort_perm.hints"), "--out", str(out), "--trace", str(trace)])
    assert rc == OK
    got = parse_program(out.read_text())
    assert variant_equal(got, fixtures.transformed("08_quicksort_perm")) is not None
    # the trace is a script: replaying it reproduces the output
    again = tmp_path / "again.chc"
    assert main(["replay", _data("08_quicksort_perm.initial.chc"), str(trace),
                 "--reachable", "--out", str(again)]) == OK
    assert again.read_text() == out.read_text()


def test_transform_budget_exhausted(tmp_path, capsys):
    part = tmp_path / "part.chc"
    rc = main(["transform", _data("01_insertionsort_perm.initial.chc"), "--budget", "3",
               "--partial", str(part)])
    assert rc == NEGATIVE
    assert "budget of 3 steps exhausted" in capsys.readouterr().err
    assert parse_program(part.read_text()).clauses


def test_emit(tmp_path):
    out = tmp_path / "x.smt2"
    assert main(["emit", _data("01_insertionsort_perm.transformed.chc"), "--out", str(out)]) == OK
    assert out.read_text().startswith("(set-logic HORN)")


def test_check_model(capsys, files):
    assert main(["check-model", _data("01_insertionsort_perm.transformed.chc"),
                 _data("01_insertionsort_perm.model.pl")]) == OK
    io = capsys.readouterr()
    assert io.out.strip() == "valid" and "new6" in io.err
    bad = files("bad.pl", fixtures.read("04_insertionsort_sum.model.pl").replace("(A = B)", "(A = B + 1)"))
    assert main(["check-model", _data("04_insertionsort_sum.transformed.chc"), bad]) == NEGATIVE
    assert capsys.readouterr().out.startswith("clause ")
    assert main(["check-model", _data("01_insertionsort_perm.initial.chc"),
                 _data("01_insertionsort_perm.model.pl")]) == USAGE


def test_eval_and_compare(capsys, files):
    assert main(["eval", _data("01_insertionsort_perm.initial.chc"),
                 "--int-hi", "2", "--max-len", "3"]) == OK
    assert capsys.readouterr().out.strip() == "no false derivation"
    neg = files("neg.chc", fixtures.read("01_insertionsort_perm.initial.chc").replace("C1=\\=C2", "C1=C2"))
    assert main(["eval", neg]) == NEGATIVE
    assert "false derived" in capsys.readouterr().out
    assert main(["compare", _data("01_insertionsort_perm.initial.chc"),
                 _data("01_insertionsort_perm.transformed.chc")]) == OK
    assert main(["compare", _data("01_insertionsort_perm.initial.chc"), neg]) == NEGATIVE


def _fake_solver(files, body):
    script = files("solver.py", "import sys, time\n" + body)
    return f"{shlex.quote(sys.executable)} {shlex.quote(script)} {{file}}"


def test_solve_with_a_fake_solver(files, capsys):
    f = files("p.chc", SAT)
    ok = _fake_solver(files, "assert open(sys.argv[1]).read().startswith('(set-logic HORN)')\n"
                             "print('sat')\nprint('p(A) :- (A >= 0).')\n")
    assert main(["solve", f, "--solver-cmd", ok]) == OK
    assert capsys.readouterr().out.split()[0] == "sat"
    r = solve("(set-logic HORN)\n", ok, 10)
    assert r.verdict == "sat" and r.model is not None and r.model.entry("p")


def test_solve_failures(files, monkeypatch, capsys):
    f = files("p.chc", SAT)
    slow = _fake_solver(files, "time.sleep(5)\n")
    with pytest.raises(SolverTimeout):
        solve("x", slow, 0.5)
    assert main(["solve", f, "--solver-cmd", slow, "--timeout", "0.5"]) == SOLVER
    noise = _fake_solver(files, "print('hello')\n")
    with pytest.raises(SolverUnparseable) as e:
        solve("x", noise, 10)
    assert "hello" in e.value.raw
    monkeypatch.delenv("CHC_SOLVER_CMD", raising=False)
    assert main(["solve", f]) == USAGE
    monkeypatch.setenv("CHC_SOLVER_CMD", _fake_solver(files, "print('unsat')\n"))
    assert main(["solve", f]) == NEGATIVE


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 binary not installed")
def test_solve_with_z3(files):
    template = "z3 -T:60 {file}"
    assert main(["solve", files("sat.chc", SAT), "--solver-cmd", template]) == OK
    assert main(["solve", files("unsat.chc", UNSAT), "--solver-cmd", template]) == NEGATIVE
    assert main(["solve", _data("04_insertionsort_sum.transformed.chc"),
                 "--solver-cmd", template]) == OK
