"""Atom normalization, substitution and (disjoint) disjunctive normal forms.

A DNF is a tuple of conjunctions; a conjunction is a tuple of literals with
duplicates removed, in first-occurrence order.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Optional

from .formula import (
    ELEM,
    FALSE,
    TRUE,
    And,
    Card,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    FormulaError,
    Not,
    Or,
    Pred,
    Rel,
    ResourceLimitError,
    Term,
    TrueF,
    conj,
    disj,
    free_vars,
    invert_word,
    is_atom,
    negate,
    reduce_word,
)

DNF = tuple  # tuple[tuple[Formula, ...], ...]


class DisjointDNF(tuple):
    """A DNF whose conjunctions have pairwise disjoint solution sets."""


# --------------------------------------------------------------------------
# atoms


def _term_key(t: Term):
    return t.sort_key()


@lru_cache(maxsize=1 << 16)
def normalize_atom(a: Formula) -> Formula:
    """Bring an atom into the canonical shape used for literal comparison.

    Equalities get one bare side: ``tau(x) = y`` between distinct variables
    (bare side is the larger variable name), ``tau(x) = x`` for a single
    variable, ``x = ground`` against a ground term.  Trivial atoms collapse to
    ``true``/``false``.
    """
    if isinstance(a, Eq):
        return _normalize_eq(a.left, a.right)
    if isinstance(a, Pred):
        return Pred(a.name, Term(a.term.base, reduce_word(a.term.word), a.term.kind))
    if isinstance(a, Card):
        if a.k == 0:
            return TRUE
        body = simplify(a.body)
        if body == FALSE:
            return FALSE
        return Card(a.k, a.var, body)
    return a


def _normalize_eq(left: Term, right: Term) -> Formula:
    left = Term(left.base, reduce_word(left.word), left.kind)
    right = Term(right.base, reduce_word(right.word), right.kind)
    if left == right:
        return TRUE
    lg, rg = left.is_ground, right.is_ground
    if lg and rg:
        if left.kind == ELEM and right.kind == ELEM and not left.word and not right.word:
            return FALSE
        a, b = sorted((left, right), key=_term_key)
        return Eq(a, b)
    if lg:
        left, right = right, left
    if right.is_ground:
        # tau(x) = s  <=>  x = tau^-1(s)
        return Eq(Term(left.base), right.apply(invert_word(left.word)))
    if left.base == right.base:
        # tau(x) = sigma(x)  <=>  sigma^-1 tau(x) = x ; pick the smaller of w, w^-1
        w = reduce_word(invert_word(right.word) + left.word)
        if not w:
            return TRUE
        w = min(w, invert_word(w))
        return Eq(Term(left.base, w), Term(left.base))
    if left.base > right.base:
        left, right = right, left
    # tau(x) = sigma(y), x < y  <=>  sigma^-1 tau(x) = y
    w = reduce_word(invert_word(right.word) + left.word)
    return Eq(Term(left.base, w), Term(right.base))


def orient_equality(a: Eq, towards: Optional[str] = None) -> Eq:
    """Rewrite ``tau(x) = tau1(y)`` as ``tau1^-1 tau(x) = y``.

    With ``towards`` given, the bare side is that variable.  Same-variable
    equalities come back in their one-variable form.
    """
    n = normalize_atom(a)
    if not isinstance(n, Eq):
        return n
    if towards is None or n.right == Term(towards) or n.left.var is None:
        return n
    if n.left.var == towards and n.right.var is not None and n.right.var != towards:
        return Eq(Term(n.right.base, invert_word(n.left.word)), Term(towards))
    return n


def is_same_variable_eq(a: Formula) -> bool:
    return isinstance(a, Eq) and a.left.var is not None and a.left.var == a.right.var


# --------------------------------------------------------------------------
# simplification


def simplify(phi: Formula) -> Formula:
    """Normalize atoms, flatten connectives and propagate constants."""
    if is_atom(phi):
        return normalize_atom(phi)
    if isinstance(phi, Not):
        b = simplify(phi.body)
        if isinstance(b, Not):
            return b.body
        if b == TRUE:
            return FALSE
        if b == FALSE:
            return TRUE
        return Not(b)
    if isinstance(phi, (And, Or)):
        is_and = isinstance(phi, And)
        unit, zero = (TRUE, FALSE) if is_and else (FALSE, TRUE)
        out: list = []
        seen: set = set()
        for p in phi.parts:
            p = simplify(p)
            subparts = p.parts if isinstance(p, type(phi)) else (p,)
            for q in subparts:
                if q == zero:
                    return zero
                if q == unit or q in seen:
                    continue
                if negate(q) in seen:
                    return zero
                seen.add(q)
                out.append(q)
        return conj(out) if is_and else disj(out)
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, simplify(phi.body))
    raise TypeError(f"not a formula: {phi!r}")


# --------------------------------------------------------------------------
# substitution


def substitute_term(t: Term, v: str, s: Term) -> Term:
    if t.kind == "var" and t.base == v:
        return s.apply(t.word)
    return t


def substitute(phi: Formula, v: str, s: Term) -> Formula:
    """Replace every free occurrence of ``v`` in ``phi`` by ``s``.

    Atoms are re-normalized.  Raises ``FormulaError`` on variable capture,
    which cannot happen on parser output.
    """
    if isinstance(phi, Eq):
        return normalize_atom(Eq(substitute_term(phi.left, v, s), substitute_term(phi.right, v, s)))
    if isinstance(phi, Pred):
        return normalize_atom(Pred(phi.name, substitute_term(phi.term, v, s)))
    if isinstance(phi, Rel):
        if v in phi.args:
            if s.kind != "var" or s.word:
                raise FormulaError("relational atoms only take variables")
            return Rel(phi.name, tuple(s.base if a == v else a for a in phi.args))
        return phi
    if isinstance(phi, (TrueF, FalseF)):
        return phi
    if isinstance(phi, Not):
        b = substitute(phi.body, v, s)
        return negate(b) if is_atom(b) else Not(b)
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(substitute(p, v, s) for p in phi.parts))
    if isinstance(phi, (Exists, Forall, Card)):
        if phi.var == v:
            return phi
        if s.var == phi.var:
            raise FormulaError(f"substitution would capture {phi.var!r}")
        body = substitute(phi.body, v, s)
        if isinstance(phi, Card):
            return normalize_atom(Card(phi.k, phi.var, body))
        return type(phi)(phi.var, body)
    raise TypeError(f"not a formula: {phi!r}")


# --------------------------------------------------------------------------
# NNF / DNF


def to_nnf(phi: Formula, positive: bool = True) -> Formula:
    """Negation normal form of a quantifier-free formula (atoms normalized)."""
    if is_atom(phi):
        a = normalize_atom(phi)
        return a if positive else negate(a)
    if isinstance(phi, Not):
        return to_nnf(phi.body, not positive)
    if isinstance(phi, (And, Or)):
        parts = tuple(to_nnf(p, positive) for p in phi.parts)
        if isinstance(phi, And) == positive:
            return And(parts)
        return Or(parts)
    raise FormulaError(f"quantifier in a quantifier-free context: {phi}")


def make_conjunction(lits) -> Optional[tuple]:
    """Deduplicate a literal list; ``None`` if it is contradictory."""
    out: list = []
    seen: set = set()
    for lit in lits:
        if lit == TRUE or lit in seen:
            continue
        if lit == FALSE or negate(lit) in seen:
            return None
        seen.add(lit)
        out.append(lit)
    return tuple(out)


def _dnf(phi: Formula, limit: int) -> list:
    if isinstance(phi, And):
        acc = [()]
        for p in phi.parts:
            sub = _dnf(p, limit)
            nxt = []
            for c1, c2 in product(acc, sub):
                c = make_conjunction(c1 + c2)
                if c is not None:
                    nxt.append(c)
            acc = _dedupe(nxt)
            if len(acc) > limit:
                raise ResourceLimitError(f"DNF exceeds {limit} conjunctions")
        return acc
    if isinstance(phi, Or):
        acc = []
        for p in phi.parts:
            acc.extend(_dnf(p, limit))
        acc = _dedupe(acc)
        if len(acc) > limit:
            raise ResourceLimitError(f"DNF exceeds {limit} conjunctions")
        return acc
    c = make_conjunction((phi,))
    return [] if c is None else [c]


def _dedupe(conjs: list) -> list:
    """Drop repeated conjunctions and those absorbed by a smaller one (``A | A & B == A``)."""
    keyed = []
    seen = set()
    for c in conjs:
        key = frozenset(c)
        if key not in seen:
            seen.add(key)
            keyed.append((key, c))
    if len(keyed) < 2:
        return [c for _, c in keyed]
    # Each kept set is filed under one of its literals; a superset must
    # contain that literal, so only those buckets need a subset test.
    buckets: dict = {}
    dropped = set()
    for i in sorted(range(len(keyed)), key=lambda i: len(keyed[i][0])):
        key = keyed[i][0]
        if any(k < key for lit in key for k in buckets.get(lit, ())):
            dropped.add(i)
            continue
        if key:
            buckets.setdefault(next(iter(key)), []).append(key)
        else:
            buckets.setdefault(None, []).append(key)
    if None in buckets:  # the empty conjunction absorbs everything else
        return [c for key, c in keyed if not key]
    return [c for i, (_, c) in enumerate(keyed) if i not in dropped]


def factor_common(phi: Formula) -> Formula:
    """Pull literals shared by several disjuncts out of a disjunction.

    ``(a & b) | (a & c) | d`` becomes ``(a & (b | c)) | d``, applied
    greedily to the most frequent literal and recursively.  Equivalent, and
    its negation has far fewer DNF conjunctions.
    """
    if isinstance(phi, And):
        return conj(factor_common(p) for p in phi.parts)
    if isinstance(phi, Not):
        return Not(factor_common(phi.body))
    if not isinstance(phi, Or):
        return phi
    parts = [p.parts if isinstance(p, And) else (p,) for p in phi.parts]
    return _factor(parts)


def _factor(parts: list) -> Formula:
    counts: dict = {}
    for p in parts:
        for lit in set(p):
            if is_atom(lit) or (isinstance(lit, Not) and is_atom(lit.body)):
                counts[lit] = counts.get(lit, 0) + 1
    best = max(counts.items(), key=lambda kv: kv[1], default=(None, 0))
    if best[1] < 2:
        return disj(conj(factor_common(x) for x in p) for p in parts)
    lit = best[0]
    with_lit = [tuple(x for x in p if x != lit) for p in parts if lit in p]
    without = [p for p in parts if lit not in p]
    if any(not p for p in with_lit):
        inner = lit
    else:
        inner = conj([lit, _factor(with_lit)])
    if not without:
        return inner
    return disj([inner, _factor(without)])


DEFAULT_DNF_LIMIT = 200_000


def to_dnf(phi: Formula, limit: int = DEFAULT_DNF_LIMIT) -> DNF:
    """Equivalent DNF of a quantifier-free formula.

    Cardinality atoms are kept as literals.  Conjunctions containing a
    literal and its complement are dropped.
    """
    return tuple(_dnf(to_nnf(phi), limit))


def dnf_to_formula(d) -> Formula:
    return disj(conj(c) for c in d)


def to_disjoint_dnf(d: DNF, limit: int = DEFAULT_DNF_LIMIT, work: Optional[int] = None) -> DisjointDNF:
    """Rewrite a DNF so its conjunctions are pairwise disjoint.

    Conjunction ``D_i`` becomes ``D_i & !D_1 & ... & !D_{i-1}`` with each
    negation expanded as ``!l_1 | (l_1 & !l_2) | ...``.  A previous
    conjunction already contradicted by the current one is skipped and
    literals already present are not re-branched on.  ``work`` caps the
    number of comparisons and branches.
    """
    done: list = []
    spent = 0
    for i, c in enumerate(d):
        partial = [c]
        for prev in d[:i]:
            spent += len(partial)
            if work is not None and spent > work:
                raise ResourceLimitError(f"disjoint DNF needs more than {work} comparisons")
            nxt = []
            for p in partial:
                pset = set(p)
                if any(negate(l) in pset for l in prev):
                    nxt.append(p)
                    continue
                missing = [l for l in prev if l not in pset]
                if not missing:
                    continue  # p implies prev: nothing new
                spent += len(missing)
                for j, lit in enumerate(missing):
                    cand = make_conjunction(p + tuple(missing[:j]) + (negate(lit),))
                    if cand is not None:
                        nxt.append(cand)
            partial = nxt
            if len(partial) > limit:
                raise ResourceLimitError(f"disjoint DNF exceeds {limit} conjunctions")
            if not partial:
                break
        done.extend(partial)
        if len(done) > limit:
            raise ResourceLimitError(f"disjoint DNF exceeds {limit} conjunctions")
    return DisjointDNF(done)
