import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chcfold.core import (
    NIL, Atom, Clause, Cons, IntConst, Sort, SortMismatch, Var, invert_renaming, is_variant,
    mklist, partition_vars, rename_apart, subst_term, unify,
)
from chcfold.solver import Sat, constraint_sat
from chcfold.syntax import parse_clause, parse_program

from conftest import first

X, Y = Var("X", Sort.INT), Var("Y", Sort.INT)
L, M = Var("L", Sort.LIST), Var("M", Sort.LIST)

IS_PERM = """
:- pred ins(int,list(int),list(int)).
:- pred insertionSort(list(int),list(int)).
:- pred count(int,list(int),int).
:- pred new1(int,int,int).
:- pred diff1(int,int,int).
new1(X,N1,N2) :- insertionSort(L,S), count(X,L,N1), count(X,S,N2).
diff1(X,N2a,N2) :- ins(X,S1,S), count(X,S,N2), count(X,S1,N2a).
false :- N1 =\\= N2, new1(X,N1,N2).
"""


def test_unify_decomposes_lists():
    s = unify(Cons(X, Var("Xs", Sort.LIST)), mklist([IntConst(1), IntConst(2)]))
    assert s == {X: IntConst(1), Var("Xs", Sort.LIST): mklist([IntConst(2)])}


def test_unify_identity_and_clash():
    assert unify(X, X) == {}
    assert unify(NIL, Cons(Y, Var("Ys", Sort.LIST))) is None


def test_unify_occurs_check():
    assert unify(L, Cons(X, L)) is None


def test_unify_rejects_mixed_sorts():
    with pytest.raises(SortMismatch):
        unify(X, L)


def test_variant_examples():
    a = [Atom("insertionSort", (Var("Xs", Sort.LIST), Var("S1", Sort.LIST)))]
    b = [Atom("insertionSort", (Var("La", Sort.LIST), Var("Sa", Sort.LIST)))]
    assert is_variant(a, b) == {Var("Xs", Sort.LIST): Var("La", Sort.LIST),
                                Var("S1", Sort.LIST): Var("Sa", Sort.LIST)}
    assert is_variant([Atom("p", (X, X))], [Atom("p", (X, Y))]) is None
    assert is_variant([], []) == {}


def test_rename_apart_new1_definition():
    p = parse_program(IS_PERM)
    defn = first(p, "new1")
    forbidden = {"X", "N1", "N2", "L", "S", "Xs", "S1"}
    c, ren = rename_apart(defn, forbidden)
    assert not (c.var_names() & forbidden)
    assert is_variant(defn.atoms(), c.atoms()) is not None
    assert c.substitute(invert_renaming(ren)) == defn


def test_rename_apart_ground_and_single():
    p = parse_program(":- pred p(int).\np(0).\np(X) :- X>0.\n")
    ground, ren = rename_apart(p.clauses[0], {"X"})
    assert ground == p.clauses[0] and ren == {}
    c, ren = rename_apart(p.clauses[1], {"X"})
    assert "X" not in c.var_names()
    assert c.substitute(invert_renaming(ren)) == p.clauses[1]


def test_partition_vars_examples():
    p = parse_program(IS_PERM)
    adt, base = partition_vars(first(p, "new1"))
    assert {v.name for v in adt} == {"L", "S"}
    assert {v.name for v in base} == {"X", "N1", "N2"}
    adt, base = partition_vars(first(p, "diff1"))
    assert {v.name for v in adt} == {"S1", "S"}
    assert {v.name for v in base} == {"X", "N2a", "N2"}
    g = parse_program(":- pred p(int).\np(0).\n").clauses[0]
    assert partition_vars(g) == (set(), set())


def test_partition_vars_exhaustive_on_corpus(corpus):
    for files in corpus.values():
        for kind in ("initial.chc", "transformed.chc"):
            for c in parse_program(files[kind]).clauses:
                adt, base = partition_vars(c)
                assert not adt & base
                assert adt | base == set(c.vars())
                assert all(v.sort.is_adt for v in adt)


def _sat(text: str) -> Sat:
    decl = ":- pred p(int,int,int,bool).\n"
    c = parse_clause(text, parse_program(decl).decls)
    return constraint_sat(c.constraints)


def test_constraint_sat_examples():
    assert _sat("p(X,Y,0,true) :- X=Y, X=\\=Y.") is Sat.UNSAT
    assert _sat("p(N1,N,0,true) :- N1=N+1, N>=0.") is Sat.SAT
    assert _sat("p(0,0,0,B) :- B=true, B=false.") is Sat.UNSAT


# ---------------------------------------------------------------------------
# properties

int_terms = st.sampled_from([X, Y, IntConst(0), IntConst(1)])
list_terms = st.recursive(st.sampled_from([NIL, L, M]),
                          lambda t: st.builds(Cons, int_terms, t), max_leaves=3)


def _ground_lists():
    out = [NIL]
    for n in (1, 2):
        for xs in itertools.product([0, 1], repeat=n):
            out.append(mklist([IntConst(v) for v in xs]))
    return out


GROUND = list(itertools.product([IntConst(0), IntConst(1)], [IntConst(0), IntConst(1)],
                                _ground_lists(), _ground_lists()))


def _apply(t, s):
    # apply until stable; the mgu is idempotent but brute-force maps are not composed
    for _ in range(6):
        t2 = subst_term(t, s)
        if t2 == t:
            return t
        t = t2
    return t


@settings(max_examples=150, deadline=None)
@given(list_terms, list_terms)
def test_unify_is_most_general(a, b):
    mgu = unify(a, b)
    if mgu is not None:
        assert subst_term(a, mgu) == subst_term(b, mgu)
    for x, y, l, m in GROUND:
        theta = {X: x, Y: y, L: l, M: m}
        if subst_term(a, theta) == subst_term(b, theta):
            assert mgu is not None
            for v in (X, Y, L, M):
                assert _apply(subst_term(v, mgu), theta) == theta[v]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["X", "Y", "L", "Z"]), min_size=1, max_size=4),
       st.sets(st.sampled_from(["X", "Y", "L", "Z", "X_1", "Y_2"])))
def test_rename_apart_inverse_is_identity(names, forbidden):
    sorts = {"X": Sort.INT, "Y": Sort.INT, "Z": Sort.BOOL, "L": Sort.LIST}
    head = Atom("p", tuple(Var(n, sorts[n]) for n in names))
    c = Clause(head, (), ())
    r, ren = rename_apart(c, forbidden)
    assert not (r.var_names() & set(forbidden))
    assert len(set(ren.values())) == len(ren)
    assert r.substitute(invert_renaming(ren)) == c


_ops = st.sampled_from(["=", "=\\=", "=<", "<", ">=", ">"])
_lin = st.tuples(st.integers(-2, 2), st.sampled_from(["X", "Y", "Z"]),
                 st.integers(-2, 2), st.sampled_from(["X", "Y", "Z"]), st.integers(-3, 3))


def _text(parts):
    out = []
    for op, (a, v, b, w, k) in parts:
        out.append(f"{a}*{v} + {b}*{w} {op} {k}")
    return ", ".join(out)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(_ops, _lin), min_size=1, max_size=4))
def test_constraint_sat_never_wrongly_unsat(parts):
    decl = ":- pred q(int,int,int).\n"
    c = parse_clause(f"q(X,Y,Z) :- {_text(parts)}.", parse_program(decl).decls)
    verdict = constraint_sat(c.constraints)
    box = range(-8, 9)
    witness = any(all(k.evaluate({"X": x, "Y": y, "Z": z}) for k in c.constraints)
                  for x in box for y in box for z in box)
    if witness:
        assert verdict is not Sat.UNSAT
    if verdict is Sat.SAT:
        assert witness


def test_constraint_sat_agrees_with_z3():
    z3 = pytest.importorskip("z3")
    decl = parse_program(":- pred q(int,int,int).\n").decls
    cases = ["X=Y, Y=Z, X=\\=Z", "X<Y, Y<Z, Z<X", "2*X = 2*Y + 1", "X>=Y+1, Y>=X",
             "X<Y, Y<Z", "X+Y = 3, X-Y = 1", "X >= 0, X =\\= 0, X =< 1"]
    for text in cases:
        c = parse_clause(f"q(X,Y,Z) :- {text}.", decl)
        s = z3.Solver()
        zx = {n: z3.Int(n) for n in "XYZ"}
        for k in c.constraints:
            lhs = sum((coef * zx[v] for v, coef in (k.lhs - k.rhs).terms), (k.lhs - k.rhs).const)
            s.add({"=": lhs == 0, "=\\=": lhs != 0, "=<": lhs <= 0, "<": lhs < 0,
                   ">=": lhs >= 0, ">": lhs > 0}[k.op])
        verdict = constraint_sat(c.constraints)
        if verdict is not Sat.UNKNOWN:
            assert s.check() == (z3.unsat if verdict is Sat.UNSAT else z3.sat), text
