import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chcfold import fixtures
from chcfold.core import Atom, Cmp, LinExpr, Sort, Var
from chcfold.formula import Top
from chcfold.smtlib import emit_smtlib
from chcfold.syntax import (
    ArityMismatch, ChcSyntaxError, ParamMismatch, SortError, UndeclaredPredicate, parse_model,
    parse_program, print_program,
)


def test_parse_is_perm_initial(corpus):
    p = parse_program(corpus["01_insertionsort_perm"]["initial.chc"])
    assert len(p.decls) == 3 and len(p.clauses) == 9
    assert p.clauses[0].head is None


def test_parse_count_clause():
    p = parse_program(":- pred count(int,list(int),int).\n"
                      "count(X,[H|T],N) :- X=H, N=M+1, count(X,T,M).\n")
    c = p.clauses[0]
    assert c.head.pred == "count" and len(c.head.args) == 3
    assert [a.pred for a in c.body] == ["count"]
    assert {str(k) for k in c.constraints} == {"X=H", "N=M+1"}


def test_parse_errors():
    with pytest.raises(UndeclaredPredicate):
        parse_program("p(X) :- X=<Y.")
    with pytest.raises(ChcSyntaxError) as e:
        parse_program(":- pred p(int).\np(X :- X>0.")
    assert (e.value.line, e.value.col) == (2, 5)
    with pytest.raises(SortError):
        parse_program(":- pred p(list(int)).\np(L) :- L>0.")
    with pytest.raises(ArityMismatch):
        parse_program(":- pred p(int).\np(X,Y).")


def test_mode_defaults_and_annotations(corpus):
    p = parse_program(corpus["08_quicksort_perm"]["initial.chc"])
    assert p.decl("partition").modes == ("in", "in", "out", "out")
    assert p.decl("count").modes == ("in", "in", "out")


def test_print_examples():
    assert print_program(parse_program("")) == ""
    p = parse_program(":- pred new1(int,int,int).\nfalse :- N1=\\=N2, new1(X,N1,N2).\n")
    assert "false :- N1=\\=N2, new1(X,N1,N2)." in print_program(p)


def test_fixture_round_trip(corpus):
    for files in corpus.values():
        for kind in ("initial.chc", "transformed.chc"):
            p = parse_program(files[kind])
            assert parse_program(print_program(p)) == p


def test_model_examples():
    m = parse_model("new1(A,B,C) :- ((B = C), (B >= 0)).\nnew4(A) :- true.\n")
    f = m.entry("new1").formula
    b, c = LinExpr.var("B"), LinExpr.var("C")
    assert set(f.parts) == {Cmp("=", b, c), Cmp(">=", b, LinExpr.num(0))}
    assert m.entry("new4").formula == Top()
    with pytest.raises(ParamMismatch):
        parse_model("p(A) :- (B = 0).")


def test_all_models_parse(corpus):
    for name, files in corpus.items():
        m = parse_model(files["model.pl"])
        assert m.entries, name


def test_smtlib_examples():
    p = parse_program(":- pred new1(int,int,int).\n:- pred new2(int,int).\n"
                      "false :- N1=\\=N2, new1(X,N1,N2).\nnew2(X,0).\n")
    out = emit_smtlib(p)
    assert ("(assert (forall ((X Int)(N1 Int)(N2 Int)) "
            "(=> (and (not (= N1 N2)) (new1 X N1 N2)) false)))") in out
    assert "(assert (forall ((X Int)) (new2 X 0)))" in out
    assert out.startswith("(set-logic HORN)") and out.rstrip().endswith("(get-model)")


def test_smtlib_lists_use_a_datatype(corpus):
    out = emit_smtlib(parse_program(corpus["01_insertionsort_perm"]["initial.chc"]))
    assert "declare-datatypes" in out
    assert "(declare-fun ins (Int IList IList) Bool)" in out


def test_smtlib_is_stable(corpus):
    for files in corpus.values():
        p = parse_program(files["transformed.chc"])
        assert emit_smtlib(p) == emit_smtlib(parse_program(files["transformed.chc"]))


def test_smtlib_accepted_by_z3(corpus):
    z3 = pytest.importorskip("z3")
    s = z3.SolverFor("HORN")
    s.set("timeout", 60000)
    text = emit_smtlib(fixtures.transformed("01_insertionsort_perm"))
    s.from_string(text.replace("(check-sat)", "").replace("(get-model)", ""))
    assert s.check() == z3.sat


# ---------------------------------------------------------------------------
# random programs

DECLS = ":- pred p(int,list(int)).\n:- pred q(int,int).\n:- pred r(bool,int).\n"

ivar = st.sampled_from(["X", "Y", "N"])
lvar = st.sampled_from(["L", "T"])
iterm = st.one_of(ivar, st.integers(-3, 3).map(str))


@st.composite
def lists(draw):
    items = draw(st.lists(iterm, max_size=2))
    tail = draw(st.one_of(lvar, st.just("[]")))
    if not items:
        return tail
    return "[" + ",".join(items) + ("" if tail == "[]" else "|" + tail) + "]"


@st.composite
def constraint(draw):
    op = draw(st.sampled_from(["=", "=\\=", "=<", "<", ">=", ">"]))
    k = draw(st.integers(-2, 2))
    rhs = draw(ivar) + (f"+{k}" if k > 0 else (f"-{-k}" if k < 0 else ""))
    return f"{draw(ivar)}{op}{rhs}"


@st.composite
def atom(draw):
    kind = draw(st.sampled_from("pqr"))
    if kind == "p":
        return f"p({draw(iterm)},{draw(lists())})"
    if kind == "q":
        return f"q({draw(iterm)},{draw(iterm)})"
    return f"r({draw(st.sampled_from(['true', 'false', 'B']))},{draw(iterm)})"


@st.composite
def clause(draw):
    head = draw(st.one_of(st.just("false"), atom()))
    body = draw(st.lists(st.one_of(constraint(), atom()), max_size=3))
    if head == "false" and not body:
        body = [draw(atom())]
    return head + (" :- " + ", ".join(body) if body else "") + "."


@settings(max_examples=150, deadline=None)
@given(st.lists(clause(), max_size=5))
def test_random_round_trip(clauses):
    try:
        p = parse_program(DECLS + "\n".join(clauses))
    except SortError:
        return      # a variable used at two sorts is rejected, which is fine
    assert parse_program(print_program(p)) == p


def test_atom_args_are_well_sorted(corpus):
    for files in corpus.values():
        p = parse_program(files["initial.chc"])
        for c in p.clauses:
            for a in c.atoms():
                d = p.decl(a.pred)
                assert len(a.args) == d.arity
                for t, s in zip(a.args, d.sorts):
                    if isinstance(t, Var):
                        assert t.sort is s
                    assert isinstance(a, Atom)
    assert Sort.LIST.is_adt and not Sort.INT.is_adt
