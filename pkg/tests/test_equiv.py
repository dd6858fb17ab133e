import random

from hypothesis import given, settings
from hypothesis import strategies as st

from chcfold import fixtures
from chcfold.core import Program
from chcfold.equiv import canonical, clause_variant, unmatched, variant_equal
from chcfold.syntax import parse_clause, parse_program, print_program

DECLS = parse_program(":- pred p(int,int).\n:- pred q(int,int,int).\n").decls


def _c(text):
    return parse_clause(text, DECLS)


def test_clause_variant_examples():
    assert clause_variant(_c("p(X,Y) :- X<Y, q(X,Y,Z)."), _c("p(A,B) :- q(A,B,C), A<B.")) is not None
    assert clause_variant(_c("p(X,Y) :- q(X,Y,Z)."), _c("p(X,X) :- q(X,X,Z).")) is None
    # equalities between variables only rename
    assert clause_variant(_c("p(X,Y) :- X=Z, q(Z,Y,W)."), _c("p(A,B) :- q(A,B,C).")) is not None
    assert clause_variant(_c("p(X,0) :- q(X,X,Y)."), _c("p(X,Y) :- Y=0, q(X,X,Z).")) is not None


def test_implied_constraint_is_dropped():
    c = canonical(_c("p(X,Y) :- X>Y, X=\\=Y."))
    assert [str(k) for k in c.constraints] == ["X>Y"]
    assert clause_variant(_c("p(X,Y) :- X>Y, X=\\=Y."), _c("p(X,Y) :- X>Y.")) is not None


def test_fixtures_equal_themselves():
    for problem in fixtures.PROBLEMS:
        p = fixtures.transformed(problem)
        assert variant_equal(p, p) is not None, problem


def test_renamed_and_permuted_program_is_equal():
    p = parse_program(":- pred new1(int,int,int).\n:- pred diff1(int,int,int).\n"
                      "false :- N1=\\=N2, new1(X,N1,N2).\nnew1(X,0,0).\n"
                      "new1(X,N1,N2) :- N1=N+1, new1(X,N,M), diff1(X,M,N2).\n"
                      "diff1(X,M,N) :- N=M+1.\n")
    q = parse_program(":- pred aux(int,int,int).\n:- pred r(int,int,int).\n"
                      "false :- B=\\=C, r(A,B,C).\nr(Z,0,0).\n"
                      "r(A,B,C) :- aux(C,D,A), r(A,E,D), B=E+1.\n"
                      "aux(N,M,X) :- N=M+1.\n")
    ren = variant_equal(p, q)
    assert ren is not None
    assert ren.preds["diff1"] == ("aux", (2, 1, 0))
    broken = parse_program(print_program(q).replace("B=E+1", "B=E+2"))
    assert variant_equal(p, broken) is None


def test_unmatched_lists_the_listing_slip():
    corrected = parse_program(fixtures.read("01_insertionsort_perm.corrected.chc"))
    listing = fixtures.transformed("01_insertionsort_perm")
    ident = {d.name: (d.name, tuple(range(d.arity))) for d in listing.decls}
    lost, extra = unmatched(corrected, listing, ident)
    assert len(lost) == len(extra) == 1
    assert "new1(X,N1,N2b)" in str(lost[0]) and "new1(Y,N1,N2b)" in str(extra[0])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(fixtures.PROBLEMS), st.integers(0, 10**6))
def test_clause_order_does_not_matter(problem, seed):
    p = fixtures.transformed(problem)
    clauses = list(p.clauses)
    random.Random(seed).shuffle(clauses)
    assert variant_equal(p, Program(p.decls, tuple(clauses))) is not None


def test_different_fixtures_are_not_equal():
    a = fixtures.transformed("03_insertionsort_length")
    b = fixtures.transformed("07_selectionsort_length")
    assert variant_equal(a, fixtures.transformed("04_insertionsort_sum")) is None
    assert (variant_equal(a, b) is None) == (variant_equal(b, a) is None)


def _scramble(c, rng):
    names = sorted(c.var_names())
    fresh = [f"V{i}" for i in range(len(names))]
    rng.shuffle(fresh)
    c = c.substitute({v: type(v)(dict(zip(names, fresh))[v.name], v.sort) for v in c.vars()})
    cons, body = list(c.constraints), list(c.body)
    rng.shuffle(cons)
    rng.shuffle(body)
    return type(c)(c.head, tuple(cons), tuple(body), c.id)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(fixtures.PROBLEMS), st.integers(0, 10**6))
def test_scrambled_clauses_stay_variants(problem, seed):
    rng = random.Random(seed)
    p = fixtures.transformed(problem)
    q = Program(p.decls, tuple(_scramble(c, rng) for c in p.clauses))
    assert variant_equal(p, q) is not None
