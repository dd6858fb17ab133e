import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chcfold import fixtures
from chcfold.core import Program
from chcfold.evaluator import (
    Agree, Disagree, FalseDerived, NoFalseDerived, Universe, UniverseTooLarge, UniverseTooSmall,
    bounded_sat, check_witness, compare, least_model,
)
from chcfold.syntax import parse_program

COUNT = """
:- pred count(int,list(int),int).
count(X,[],0).
count(X,[H|T],N) :- X=H, N=M+1, count(X,T,M).
count(X,[H|T],N) :- X=\\=H, count(X,T,N).
"""

IS_PERM = fixtures.read("01_insertionsort_perm.initial.chc")


def test_count_extension():
    ext = least_model(parse_program(COUNT))
    assert ("count", (1, (1, 2, 1), 2)) in ext
    assert ("count", (1, (1, 2, 1), 1)) not in ext
    # one tuple per (element, list), except count(k,[k,k,k],3) whose result leaves [0,2]
    assert len(ext["count"]) == 3 * len(Universe().lists()) - 3


def test_insertion_sort_extension():
    ext = least_model(fixtures.initial("01_insertionsort_perm"))
    assert ("insertionSort", ((2, 0, 1), (0, 1, 2))) in ext


def test_empty_program():
    assert least_model(parse_program("")).size() == 0


def test_constant_outside_universe():
    p = parse_program(":- pred p(int).\np(5).\n")
    with pytest.raises(UniverseTooSmall):
        least_model(p)
    assert ("p", (5,)) in least_model(p, Universe(0, 5, 0))


def test_memory_guard():
    with pytest.raises(UniverseTooLarge):
        least_model(fixtures.initial("01_insertionsort_perm"), cap=1000)


def test_bounded_sat_examples():
    assert isinstance(bounded_sat(fixtures.initial("01_insertionsort_perm")), NoFalseDerived)
    mutated = IS_PERM.replace("C1=\\=C2", "C1=C2")
    r = bounded_sat(parse_program(mutated))
    assert isinstance(r, FalseDerived)
    env = dict(r.witness.env)
    assert env["C1"] == env["C2"]
    r = bounded_sat(fixtures.negated("02_insertionsort_ordered"))
    assert isinstance(r, FalseDerived)


def test_compare_examples():
    p, t = fixtures.initial("01_insertionsort_perm"), fixtures.transformed("01_insertionsort_perm")
    assert compare(p, t) == Agree(NoFalseDerived())
    assert isinstance(compare(t, t), Agree)
    text = fixtures.read("01_insertionsort_perm.transformed.chc")
    assert "\nnew1(X,0,0).\n" in text
    broken = parse_program(text.replace("\nnew1(X,0,0).\n", "\nnew1(X,0,1).\n"))
    d = compare(t, broken)
    assert isinstance(d, Disagree)
    assert isinstance(d.first, NoFalseDerived) and isinstance(d.second, FalseDerived)
    assert "new1(0,0,1)" in str(d) or "new1(1,0,1)" in str(d) or "new1(2,0,1)" in str(d)


def test_witnesses_revalidate():
    for problem in fixtures.PROBLEMS:
        p = fixtures.negated(problem)
        r = bounded_sat(p, fixtures.universe(problem), strict=fixtures.strict(problem))
        assert isinstance(r, FalseDerived), problem
        assert check_witness(p, r.witness), problem


def test_tampered_witness_fails():
    p = parse_program(IS_PERM.replace("C1=\\=C2", "C1=C2"))
    w = bounded_sat(p).witness
    bad_env = tuple((k, 7 if k == "C1" else v) for k, v in w.env)
    assert not check_witness(p, type(w)(w.clause_id, w.fact, bad_env, w.children))


def test_naive_and_semi_naive_agree():
    for problem in ("01_insertionsort_perm", "09_quicksort_sum"):
        for program in (fixtures.initial(problem), fixtures.transformed(problem)):
            u = Universe(0, 1, 3)
            assert least_model(program, u).facts == least_model(program, u, naive=True).facts


def test_clause_order_is_irrelevant():
    p = fixtures.initial("08_quicksort_perm")
    rev = Program(p.decls, tuple(reversed(p.clauses)))
    u = Universe(0, 1, 3)
    assert least_model(p, u).facts == least_model(rev, u).facts


def test_universe_size():
    u = Universe(0, 2, 3)
    assert len(u.lists()) == 1 + 3 + 9 + 27
    with pytest.raises(ValueError):
        Universe(2, 0, 1)


_bounds = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 1), st.integers(0, 1))


@settings(max_examples=20, deadline=None)
@given(_bounds)
def test_monotone_in_the_universe(b):
    hi1, dhi, len1, dlen = b
    small, big = Universe(0, hi1, len1 + 1), Universe(0, hi1 + dhi, len1 + 1 + dlen)
    p = fixtures.initial("04_insertionsort_sum")
    e1, e2 = least_model(p, small, strict=False), least_model(p, big, strict=False)
    for pred, tuples in e1.facts.items():
        assert tuples <= e2[pred]
