import pytest

from chcfold import fixtures
from chcfold.core import PredDecl, Program, Sort, partition_vars
from chcfold.elim import eliminate
from chcfold.equiv import clause_variant
from chcfold.evaluator import bounded_sat
from chcfold.syntax import parse_clause, parse_program, print_program
from chcfold.transform import (
    EmptyBody, NoDefiningClauses, SelectorOutOfRange, Session, StepFailed, UnknownClause,
    fold_clause, iter_script, parse_step, reachable, replay,
)

NEW1_DEF = "new1(X,N1,N2) :- insertionSort(L,S), count(X,L,N1), count(X,S,N2)."


def _session(problem="01_insertionsort_perm"):
    return Session(fixtures.initial(problem))


def _with_diff1(program: Program) -> Program:
    return program.with_decl(PredDecl("diff1", (Sort.INT, Sort.INT, Sort.INT)))


def _define_new1(s: Session):
    goal = s.program.clause(1)
    return s.define(goal.body, name="new1")


def test_define_from_the_goal_body():
    s = _session()
    d = _define_new1(s)
    c = d.clause
    assert clause_variant(c, parse_clause(NEW1_DEF, s.program.decls)) is not None
    _, base = partition_vars(c)
    assert set(c.head.args) == base


def test_define_ground_body_has_empty_head():
    p = parse_program(":- pred p(int).\np(1).\n")
    s = Session(p)
    d = s.define(parse_clause("p(1).", p.decls).atoms()[:1])
    assert d.clause.head.args == ()


def test_define_needs_atoms():
    with pytest.raises(EmptyBody):
        _session().define([])


def test_unfolding_the_definition_gives_three_clauses():
    s = _session()
    d = _define_new1(s)
    s.fold(1, "new1")
    work = s.unfold(d.clause.id, 1)
    done = []
    while work:
        c = work.pop(0)
        i = next((k for k, a in enumerate(c.body)
                  if a.pred == "count" and not isinstance(a.args[1], type(c.body[0].args[0]))
                  and "[" in str(a.args[1])), None)
        if i is None:
            done.append(c)
        else:
            work.extend(s.unfold(c.id, i + 1))
    decls = s.program.decls
    expected = [parse_clause(t, decls) for t in (
        "new1(X,0,0).",
        "new1(X,N1,N2) :- N1=N+1, insertionSort(Xs,S1), ins(X,S1,S), count(X,Xs,N), count(X,S,N2).",
        "new1(X,N1,N2) :- X=\\=Y, insertionSort(Xs,S1), ins(Y,S1,S), count(X,Xs,N1), count(X,S,N2).",
    )]
    assert len(done) == 3
    for want in expected:
        assert sum(clause_variant(got, want) is not None for got in done) == 1, want


def test_unfold_prunes_contradictions():
    p = parse_program(":- pred count(int,list(int),int).\n:- pred q.\n"
                      "count(X,[],0).\ncount(X,[H|T],N) :- X=H, N=M+1, count(X,T,M).\n"
                      "q :- N=\\=0, count(X,[],N).\n")
    s = Session(p)
    assert s.unfold(3, 1) == []


def test_unfold_errors():
    s = _session()
    with pytest.raises(SelectorOutOfRange):
        s.unfold(1, 9)
    p = parse_program(":- pred p(int).\n:- pred q(int).\nq(X) :- p(X).\n")
    with pytest.raises(NoDefiningClauses):
        Session(p).unfold(1, 1)
    with pytest.raises(UnknownClause):
        s.unfold(99, 1)


def test_fold_goal_with_new1():
    s = _session()
    _define_new1(s)
    c = s.fold(1, "new1")
    assert str(c) == "false :- C1=\\=C2, new1(X,C1,C2)."


def test_fold_recursive_clause_with_new1():
    s = _session()
    d = _define_new1(s)
    p = _with_diff1(s.program)
    rec = parse_clause("new1(X,N1,N2) :- N1=N+1, insertionSort(Xs,S1), count(X,Xs,N), "
                       "count(X,S1,N2a), diff1(X,N2a,N2).", p.decls)
    f = fold_clause(rec, d)
    want = parse_clause("new1(X,N1,N2) :- N1=N+1, new1(X,N,N2a), diff1(X,N2a,N2).", p.decls)
    assert clause_variant(f, want) is not None
    assert fold_clause(rec, d) == f        # deterministic


def test_fold_not_applicable_is_none():
    s = _session()
    d = _define_new1(s)
    assert fold_clause(s.program.clause(4), d) is None


def test_replay_empty_script_is_identity():
    p = fixtures.initial("01_insertionsort_perm")
    assert replay(p, "").program == p


def test_replay_missing_clause():
    with pytest.raises(StepFailed) as e:
        replay(fixtures.initial("01_insertionsort_perm"), "unfold 77 1\n")
    assert e.value.index == 0
    assert isinstance(e.value.__cause__, UnknownClause)


def test_script_parsing_skips_comments():
    text = "% comment\n\nunfold 3 1\nprune 4\n"
    assert [t for _, t in iter_script(text)] == ["unfold 3 1", "prune 4"]
    p = fixtures.initial("01_insertionsort_perm")
    assert str(parse_step("diff 13 new1 new1", p)) == "diff 13 new1 new1"


@pytest.mark.parametrize("problem", ["01_insertionsort_perm", "04_insertionsort_sum",
                                     "09_quicksort_sum"])
def test_replaying_a_trace_reproduces_the_output(problem):
    r = eliminate(fixtures.initial(problem))
    text = "".join(f"{step}\n" for step in r.trace)
    again = replay(fixtures.initial(problem), text)
    assert print_program(reachable(again.program)) == print_program(r.program)


def test_unfold_keeps_false_derivability_small():
    # a quick instance of the small-scope property; the acceptance suite runs all steps
    s = _session()
    d = _define_new1(s)
    s.fold(1, "new1")
    before = s.program
    s.unfold(d.clause.id, 1)
    assert type(bounded_sat(before)) is type(bounded_sat(s.program))


def test_define_head_vars_are_base_vars_on_corpus_runs():
    r = eliminate(fixtures.initial("03_insertionsort_length"))
    for d in r.session.defs.values():
        _, base = partition_vars(d.clause)
        assert set(d.clause.head.args) == base
        assert len(d.clause.head.args) == len(set(d.clause.head.args))
