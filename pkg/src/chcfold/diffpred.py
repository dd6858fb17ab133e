"""Introduction of difference predicates: a blocked fold is repaired by
matching renamed copies of definitions against a clause body and packing the
atoms that do not match into new predicates."""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    Atom, Clause, Cons, Nil, Program, Var, is_variant, match_term, rename_apart, term_vars,
)
from .transform import (
    Definition, DiffIntro, Session, TransformError, constraint_key, fold_clause,
    make_definition_clause,
)


class NoMatch(TransformError):
    pass


class UnfoldableResidue(TransformError):
    pass


def find_embedding(target: Clause, defn: Definition) -> bool:
    """Every atom of the definition body has a variant among the target's atoms."""
    if not target.body or not defn.atoms:
        return False
    return all(any(is_variant([a], [b]) is not None for b in target.body) for a in defn.atoms)


def embedding_count(target: Clause, defn: Definition) -> int:
    """How many disjoint copies of the definition body the target can host."""
    if not defn.atoms:
        return 0
    need: dict[str, int] = {}
    for a in defn.atoms:
        need[a.pred] = need.get(a.pred, 0) + 1
    counts = []
    for pred, k in need.items():
        pattern = next(a for a in defn.atoms if a.pred == pred)
        have = sum(1 for b in target.body if b.pred == pred and is_variant([pattern], [b]) is not None)
        counts.append(have // k)
    return max(counts)


@dataclass(frozen=True)
class Matching:
    target: Clause
    defs: tuple[Definition, ...]
    copies: tuple[Clause, ...]
    sigma: dict
    pairs: tuple[tuple[int, int, int], ...]  # (copy, def atom, target atom)
    target_mismatch: tuple[int, ...]          # target atom positions
    def_mismatch: tuple[tuple[Atom, ...], ...]  # per copy, sigma applied
    linking: tuple                            # target constraints kept with the mismatch

    def matched_targets(self) -> set[int]:
        return {t for _, _, t in self.pairs}


def _has_adt(a: Atom) -> bool:
    return any(v.sort.is_adt for v in a.vars()) or any(isinstance(t, (Cons, Nil)) for t in a.args)


def _try_pair(a: Atom, b: Atom, sigma: dict, program: Program, copy_vars: set,
              partial: bool = False) -> dict | None:
    """Extend sigma so that a maps onto b: inputs first, then outputs."""
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    d = program.decl(a.pred)
    th = dict(sigma)
    for k in d.in_positions():
        if not match_term(a.args[k], b.args[k], th):
            return None
    for k in d.out_positions():
        if not match_term(a.args[k], b.args[k], th):
            return None
    if not _injective(th, copy_vars):
        return None
    return th


def _injective(th: dict, copy_vars: set) -> bool:
    seen = {}
    for v, t in th.items():
        if v in copy_vars and isinstance(t, Var):
            if t in seen and seen[t] != v:
                return False
            seen[t] = v
    return True


def _rarest_first(atoms) -> list[int]:
    freq: dict[str, int] = {}
    for a in atoms:
        freq[a.pred] = freq.get(a.pred, 0) + 1
    return sorted(range(len(atoms)), key=lambda i: (freq[atoms[i].pred], i))


def match(program: Program, target: Clause, defs, supply=None) -> Matching:
    """Rename each definition apart and pair its atoms greedily with the target's.

    Candidate pairs are taken in (copy, definition atom, target atom) order; if
    that matching would pin an output of the definition's unmatched atoms, the
    definition atoms are retried rarest predicate first."""
    first = _match(program, target, defs, supply, rarest=False)
    if safe_matching(program, first):
        return first
    second = _match(program, target, defs, supply, rarest=True)
    if safe_matching(program, second):
        return second
    raise NoMatch(f"every matching of clause {target.id} pins a definition output")


def _match(program: Program, target: Clause, defs, supply, rarest: bool) -> Matching:
    forbidden = set(target.var_names())
    copies = []
    for d in defs:
        c, _ = rename_apart(d.clause, forbidden, supply)
        forbidden |= c.var_names()
        copies.append(c)
    sigma: dict = {}
    used: set[int] = set()
    pairs = []
    for ci, copy in enumerate(copies):
        cvars = set(copy.vars())
        got = False
        order = _rarest_first(copy.body) if rarest else range(len(copy.body))
        for ai in order:
            a = copy.body[ai]
            for tj, b in enumerate(target.body):
                if tj in used:
                    continue
                th = _try_pair(a, b, sigma, program, cvars)
                if th is not None:
                    sigma = th
                    used.add(tj)
                    pairs.append((ci, ai, tj))
                    got = True
                    break
        if not got:
            raise NoMatch(f"no atom of {defs[ci].name} matches clause {target.id}")
    # consistent bindings of base-sorted inputs of unpaired atoms
    paired_def = {(ci, ai) for ci, ai, _ in pairs}
    for ci, copy in enumerate(copies):
        cvars = set(copy.vars())
        for ai, a in enumerate(copy.body):
            if (ci, ai) in paired_def:
                continue
            d = program.decl(a.pred)
            for tj, b in enumerate(target.body):
                if tj in used or b.pred != a.pred:
                    continue
                for k in d.in_positions():
                    x, y = a.args[k], b.args[k]
                    if isinstance(x, Var) and not x.sort.is_adt and x not in sigma \
                            and isinstance(y, Var):
                        th = dict(sigma)
                        th[x] = y
                        if _injective(th, cvars):
                            sigma = th
    t_mis = tuple(j for j, b in enumerate(target.body) if j not in used and _has_adt(b))
    d_mis = []
    for ci, copy in enumerate(copies):
        d_mis.append(tuple(a.substitute(sigma) for ai, a in enumerate(copy.body)
                           if (ci, ai) not in paired_def))
    pairs.sort()
    return Matching(target, tuple(defs), tuple(copies), sigma, tuple(pairs), t_mis,
                    tuple(d_mis), ())


def safe_matching(program: Program, m: Matching) -> bool:
    """The definition side of the mismatch must be free to produce its outputs:
    each output is a distinct variable that the target clause does not use.
    Together with totality of the list predicates this keeps every derivation
    through the target clause available after the replacement."""
    tvars = set(m.target.vars())
    seen: set = set()
    for mis in m.def_mismatch:
        for a in mis:
            d = program.decl(a.pred)
            for k in d.out_positions():
                t = a.args[k]
                if not isinstance(t, Var) or t in seen or t in tvars:
                    return False
                seen.add(t)
    return True


def components(atoms: list[Atom]) -> list[list[int]]:
    """Partition atom indices by the relation 'shares a list variable'."""
    parent = list(range(len(atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[Var, int] = {}
    for i, a in enumerate(atoms):
        for v in a.vars():
            if v.sort.is_adt:
                if v in owner:
                    parent[find(i)] = find(owner[v])
                else:
                    owner[v] = i
    groups: dict[int, list[int]] = {}
    for i in range(len(atoms)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _out_vars(program: Program, atoms) -> set[Var]:
    out: set[Var] = set()
    for a in atoms:
        d = program.decl(a.pred)
        for k in d.out_positions():
            out.update(term_vars(a.args[k]))
    return out


def _reuse(session: Session, atoms, constraints) -> Atom | None:
    """Head instance of an existing definition whose body is a variant."""
    for d in session.defs.values():
        dc = d.clause
        if len(dc.body) != len(atoms) or len(dc.constraints) != len(constraints):
            continue
        rho = is_variant(list(dc.body), list(atoms))
        if rho is None:
            continue
        if not all(v in rho for v in dc.head.vars()):
            continue
        mine = {constraint_key(c) for c in constraints}
        theirs = {constraint_key(c.substitute(rho)) for c in dc.constraints}
        if mine != theirs:
            continue
        return dc.head.substitute(rho)
    return None


@dataclass(frozen=True)
class DiffIntroduction:
    diff_defs: tuple[Definition, ...]
    replaced: tuple[Atom, ...]
    added: tuple[Atom, ...]
    folded_result: Clause


def introduce_diff(session: Session, m: Matching) -> DiffIntroduction:
    """Define difference predicates for the mismatch, swap them in, then fold each copy."""
    program = session.program
    target = m.target
    t_atoms = [target.body[j] for j in m.target_mismatch]
    d_atoms = [a for group in m.def_mismatch for a in group]
    if not t_atoms or not d_atoms:
        raise TransformError(f"clause {target.id} needs no difference predicate")
    pool = t_atoms + d_atoms
    n_t = len(t_atoms)
    def_outs = _out_vars(program, d_atoms)
    heads: list[Atom] = []
    new_defs: list[Definition] = []
    for comp in components(pool):
        atoms = [pool[i] for i in comp]
        names = {v.name for a in atoms for v in a.vars() if not v.sort.is_adt}
        linking = [c for c in target.constraints if c.var_names() and c.var_names() <= names]
        reused = _reuse(session, atoms, linking)
        if reused is not None:
            heads.append(reused)
            continue
        tgt_outs = _out_vars(program, [pool[i] for i in comp if i < n_t])
        outs = {v for v in tgt_outs if v not in def_outs}
        name = session.fresh_name("diff")
        clause, decl = make_definition_clause(program, name, atoms, linking, out=outs)
        program = program.with_decl(decl)
        session.program = program
        [clause] = session._replace(None, [clause])
        program = session.program
        defn = Definition(clause, len(session.trace))
        session.defs[name] = defn
        new_defs.append(defn)
        heads.append(clause.head)
    # replace the target mismatch by the definition mismatch and diff heads
    keep = [a for j, a in enumerate(target.body) if j not in m.target_mismatch]
    replaced = Clause(target.head, target.constraints, tuple(keep + d_atoms + heads))
    # fold with every definition copy
    current = replaced
    for ci, copy in enumerate(m.copies):
        expected = [a.substitute(m.sigma) for a in copy.body]
        positions: list[int] = []
        for a in expected:
            j = next((j for j, b in enumerate(current.body) if b == a and j not in positions), None)
            if j is None:
                raise UnfoldableResidue(f"atom {a} missing after replacement")
            positions.append(j)
        folded = fold_clause(current, m.defs[ci], tuple(positions))
        if folded is None:
            raise UnfoldableResidue(f"cannot fold clause {target.id} with {m.defs[ci].name}")
        current = folded
    return DiffIntroduction(tuple(new_defs), tuple(t_atoms), tuple(d_atoms + heads), current)


def diff_step(session: Session, cid: int, names: tuple[str, ...]) -> Clause:
    before = session.program
    target = session.clause(cid)
    try:
        defs = [session.defs[n] for n in names]
    except KeyError as e:
        raise TransformError(f"{e.args[0]} is not a definition") from None
    for d in defs:
        if not find_embedding(target, d):
            raise NoMatch(f"{d.name} is not embedded in clause {cid}")
    m = match(session.program, target, defs, session.supply)
    intro = introduce_diff(session, m)
    [new] = session._replace(cid, [intro.folded_result])
    session.add_external(DiffIntro(cid, tuple(names)), before)
    return new


__all__ = [
    "DiffIntroduction", "Matching", "NoMatch", "UnfoldableResidue", "components", "diff_step",
    "embedding_count", "find_embedding", "introduce_diff", "match",
]
