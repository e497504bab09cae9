"""Quantifier elimination over bijective structures.

``exists y`` over a conjunction of bijective literals is removed either by
substituting a witness term (some literal forces ``y = tau(x)``) or, when
``y`` only occurs in disequalities ``y != tau_j(x_j)`` besides its
one-variable part ``psi(y)``, by a case split on how many distinct
``tau_j(x_j)`` satisfy ``psi``, compared against a cardinality statement
``#>= h+1 y. psi(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

from .bij_structure import BijStructure, StepMeter, NULL_METER, eval_qf, scan
from .formula import (
    ELEM,
    FALSE,
    TRUE,
    And,
    Card,
    Eq,
    Exists,
    Forall,
    Formula,
    FormulaError,
    Not,
    Or,
    Pred,
    Rel,
    ResourceLimitError,
    Term,
    conj,
    disj,
    free_vars,
    is_atom,
    negate,
    subformulas,
    to_text,
)
from .normal_forms import (
    factor_common,
    make_conjunction,
    normalize_atom,
    orient_equality,
    simplify,
    substitute,
    to_dnf,
)

MAX_DISEQUALITIES = 12


class RelationalAtomError(FormulaError):
    """A relational atom reached the bijective engine; reduce the structure first."""


@dataclass
class EliminationStep:
    var: str
    case: str  # "positive-equality" | "all-negative" | "vacuous"
    witness: Optional[Term] = None
    k: int = 0
    triples: list = field(default_factory=list)  # (h, P, Q)


def _mentions(lit: Formula, v: str) -> bool:
    return v in free_vars(lit)


def _atom_of(lit: Formula) -> Formula:
    return lit.body if isinstance(lit, Not) else lit


def _links(lit: Formula, y: str) -> Optional[Term]:
    """If ``lit`` is a positive equality ``y = tau(x)`` with ``x != y``, return ``tau(x)``."""
    if not isinstance(lit, Eq):
        return None
    o = orient_equality(lit, y)
    if isinstance(o, Eq) and o.right == Term(y) and o.left.var is not None and o.left.var != y:
        return o.left
    return None


def split_literals(lits, y: str):
    """Partition a conjunction around ``y``.

    Returns ``(outside, psi, witnesses, diseqs)``: literals not mentioning
    ``y``; one-variable literals on ``y``; terms ``tau(x)`` with ``y = tau(x)``
    present; terms ``tau(x)`` with ``y != tau(x)`` present.
    """
    outside, psi, witnesses, diseqs = [], [], [], []
    for lit in lits:
        if isinstance(_atom_of(lit), Rel):
            raise RelationalAtomError(f"relational atom {to_text(lit)}; run the degree reduction first")
        if not _mentions(lit, y):
            outside.append(lit)
            continue
        others = [v for v in free_vars(lit) if v != y]
        if not others:
            psi.append(lit)
            continue
        w = _links(lit, y)
        if w is not None:
            witnesses.append(w)
            continue
        if isinstance(lit, Not) and isinstance(lit.body, Eq):
            w = _links(lit.body, y)
            if w is not None:
                diseqs.append(w)
                continue
        raise FormulaError(f"not a bijective literal: {to_text(lit)}")
    return outside, psi, witnesses, diseqs


def choose_witness(witnesses):
    """Shortest witness term, ties broken by literal order."""
    return min(enumerate(witnesses), key=lambda iw: (len(iw[1].word), iw[0]))[1]


def eliminate_one(lits, y: str, prune: bool = True, trace: Optional[list] = None) -> Formula:
    """Quantifier-free equivalent of ``exists y. (lit_1 & ... & lit_r)``."""
    outside, psi, witnesses, diseqs = split_literals(lits, y)
    if witnesses:
        w = choose_witness(witnesses)
        if trace is not None:
            trace.append(EliminationStep(y, "positive-equality", witness=w))
        rest = [substitute(lit, y, w) for lit in psi]
        for t in witnesses:
            if t is not w:
                rest.append(normalize_atom(Eq(w, t)))
        for t in diseqs:
            rest.append(negate(normalize_atom(Eq(w, t))))
        body = conj(outside + rest)
        return simplify(body) if prune else body
    psi_f = conj(psi)
    k = len(diseqs)
    if k == 0:
        if trace is not None:
            trace.append(EliminationStep(y, "vacuous"))
        body = conj(outside + [Card(1, y, psi_f)])
        return simplify(body) if prune else body
    if k > MAX_DISEQUALITIES:
        raise ResourceLimitError(
            f"eliminating {y!r} needs {k} disequalities (limit {MAX_DISEQUALITIES}); expansion is 3^k"
        )
    step = EliminationStep(y, "all-negative", k=k)
    disjuncts = _expand_all_negative(psi_f, y, diseqs, prune, step)
    if trace is not None:
        trace.append(step)
    body = conj(outside + [disj(disjuncts)])
    return simplify(body) if prune else body


def _expand_all_negative(psi: Formula, y: str, terms, prune: bool, step: EliminationStep) -> list:
    k = len(terms)
    idx = range(k)
    psi_at = [substitute(psi, y, t) for t in terms]
    disjuncts = []
    seen = set()
    for h in range(k + 1):
        card = Card(h + 1, y, psi)
        for p_size in range(h, k + 1):
            for P in combinations(idx, p_size):
                for Q in combinations(P, h):
                    step.triples.append((h, P, Q))
                    parts = [psi_at[j] for j in Q]
                    for i in P:
                        parts.append(disj(normalize_atom(Eq(terms[i], terms[j])) for j in Q))
                    for j in idx:
                        if j not in P:
                            parts.append(Not(psi_at[j]))
                    parts.append(card)
                    d = conj(parts)
                    if prune:
                        d = simplify(d)
                        if d == FALSE or d in seen:
                            continue
                        seen.add(d)
                    disjuncts.append(d)
    return disjuncts


def eliminate_all(
    phi: Formula,
    prune: bool = True,
    trace: Optional[list] = None,
    structure: Optional[BijStructure] = None,
    meter: StepMeter = NULL_METER,
) -> Formula:
    """Boolean combination of bijective atoms equivalent to ``phi``.

    Quantifiers are removed innermost first; cardinality bodies are
    eliminated too.  A closed input yields a Boolean combination of
    cardinality statements (and constant-only atoms).

    With ``structure`` given, variables without a witness are eliminated
    by scanning their one-variable part on that structure instead (see
    :func:`eliminate_one_on`); the result is then only equivalent on
    ``structure``.
    """
    cache: dict = {}

    def rec(f: Formula) -> Formula:
        if isinstance(f, Rel):
            raise RelationalAtomError(f"relational atom {to_text(f)}; run the degree reduction first")
        if isinstance(f, Card):
            return normalize_atom(Card(f.k, f.var, rec(f.body)))
        if is_atom(f):
            return normalize_atom(f)
        if isinstance(f, Not):
            b = rec(f.body)
            return simplify(Not(b)) if prune else Not(b)
        if isinstance(f, (And, Or)):
            out = type(f)(tuple(rec(p) for p in f.parts))
            return simplify(out) if prune else out
        if isinstance(f, Forall):
            inner = rec(Exists(f.var, Not(f.body)))
            return simplify(Not(inner)) if prune else Not(inner)
        if isinstance(f, Exists):
            body = rec(f.body)
            y = f.var
            if structure is None:
                parts = [eliminate_one(c, y, prune, trace) for c in to_dnf(body)]
            else:
                parts = [eliminate_one_on(c, y, structure, cache, meter) for c in to_dnf(body)]
                return factor_common(simplify(disj(parts)))
            out = disj(parts)
            return simplify(out) if prune else out
        raise TypeError(f"not a formula: {f!r}")

    return rec(phi)


def eliminate_one_on(lits, y: str, S: BijStructure, cache: Optional[dict] = None, meter: StepMeter = NULL_METER) -> Formula:
    """Formula equivalent to ``exists y. (lit_1 & ... & lit_r)`` on ``S``.

    A witness equality is substituted as usual.  Otherwise the elements
    ``A`` satisfying the one-variable part are scanned once: more than ``r``
    of them make the disequalities irrelevant, fewer are listed as explicit
    domain constants.
    """
    conjs = _sigma1_step(lits, y, S, {} if cache is None else cache, meter)
    return disj(conj(c) for c in conjs)


def is_cardinality_combination(phi: Formula) -> bool:
    """True if ``phi`` is built from cardinality atoms, true/false and connectives only."""
    if isinstance(phi, Card):
        return True
    if isinstance(phi, Not):
        return is_cardinality_combination(phi.body)
    if isinstance(phi, (And, Or)):
        return all(is_cardinality_combination(p) for p in phi.parts)
    return phi in (TRUE, FALSE)


def model_check(phi: Formula, S: BijStructure, meter: StepMeter = NULL_METER) -> bool:
    """Truth of a closed FO_Bij sentence: eliminate, then count each statement once."""
    if free_vars(phi):
        raise FormulaError(f"model checking needs a closed formula; free: {free_vars(phi)}")
    return eval_qf(S, {}, eliminate_all(phi), meter)


# --------------------------------------------------------------------------
# existential fast path


@dataclass(frozen=True)
class Sigma1Formula:
    """``exists y_1 ... y_d. matrix`` with ``matrix`` a DNF (tuple of literal tuples)."""

    prefix: tuple
    matrix: tuple

    @classmethod
    def from_formula(cls, phi: Formula) -> "Sigma1Formula":
        prefix = []
        while isinstance(phi, Exists):
            prefix.append(phi.var)
            phi = phi.body
        for sub in subformulas(phi):
            if isinstance(sub, (Exists, Forall)):
                raise FormulaError("not existential: quantifier inside the matrix")
            if isinstance(sub, Card):
                raise FormulaError("existential fast path does not accept cardinality atoms")
        return cls(tuple(prefix), to_dnf(phi))

    def to_formula(self) -> Formula:
        body = disj(conj(c) for c in self.matrix)
        for v in reversed(self.prefix):
            body = Exists(v, body)
        return body


def sigma1_model_check(phi: Sigma1Formula, S: BijStructure, meter: StepMeter = NULL_METER) -> bool:
    """Model check an existential sentence without renormalizing the matrix.

    For each eliminated variable the one-variable part ``psi`` is scanned once
    to get ``A``; if ``|A|`` exceeds the number of disequalities they are
    dropped, otherwise the conjunction is expanded over the elements of ``A``
    injected as constants.
    """
    for lits in phi.matrix:
        for lit in lits:
            if isinstance(_atom_of(lit), Card):
                raise FormulaError("existential fast path does not accept cardinality atoms")
    matrix = [c for c in phi.matrix]
    free = set()
    for c in matrix:
        for lit in c:
            free.update(free_vars(lit))
    if free - set(phi.prefix):
        raise FormulaError(f"free variables {sorted(free - set(phi.prefix))}")
    cache: dict = {}
    for y in reversed(phi.prefix):
        nxt = []
        for lits in matrix:
            nxt.extend(_sigma1_step(lits, y, S, cache, meter))
        matrix = nxt
    return any(all(eval_qf(S, {}, lit, meter) for lit in c) for c in matrix)


def _sigma1_step(lits, y, S, cache, meter):
    outside, psi, witnesses, diseqs = split_literals(lits, y)
    if witnesses:
        w = choose_witness(witnesses)
        rest = [substitute(lit, y, w) for lit in psi]
        rest += [normalize_atom(Eq(w, t)) for t in witnesses if t is not w]
        rest += [negate(normalize_atom(Eq(w, t))) for t in diseqs]
        c = make_conjunction(outside + rest)
        return [] if c is None else [c]
    key = (y, frozenset(psi))
    A = cache.get(key)
    if A is None:
        A = cache[key] = scan(S, psi, y, meter)
    if len(A) > len(diseqs):
        c = make_conjunction(outside)
        return [] if c is None else [c]
    out = []
    for a in A:
        elem = Term(a, (), ELEM)
        c = make_conjunction(outside + [negate(normalize_atom(Eq(elem, t))) for t in diseqs])
        if c is not None:
            out.append(c)
    return out
