"""Two-phase enumerators with constant delay.

Every enumerator has a ``precompute()`` phase and a ``next()`` method that
returns the next tuple or ``None`` once exhausted.  All work is charged to a
shared :class:`StepMeter`, so delays can be measured in abstract steps
instead of wall-clock time.

A conjunction of bijective literals over variables ``x_1..x_k`` is
enumerated by recursion on ``k`` with ``y = x_k``:

* ``k = 1``: scan the domain once and walk the sorted result;
* some literal forces ``y = tau(x_i)``: enumerate the rest over
  ``x_1..x_{k-1}`` with ``y`` replaced by ``tau(x_i)`` and append the value;
* otherwise ``y`` only meets the other variables through ``r``
  disequalities ``y != tau_i(x_j)``.  With ``Q2`` the elements satisfying
  the one-variable part on ``y``: if ``|Q2| <= r`` take the union over
  ``b in Q2`` of the instances ``y := b``; else loop ``b`` over ``Q2`` for
  each tuple of the ``y``-free part, skipping the at most ``r`` forbidden
  values.  Consecutive skips never exceed ``2r``.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bij_structure import BijStructure, StepMeter, eval_qf, eval_vector, scan
from .formula import (
    ELEM,
    FALSE,
    TRUE,
    And,
    Eq,
    Not,
    Or,
    Pred,
    Formula,
    FormulaError,
    Card,
    Exists,
    Forall,
    Rel,
    is_atom,
    is_literal,
    conj,
    disj,
    ResourceLimitError,
    Term,
    free_vars,
    negate,
    to_text,
)
from .normal_forms import (
    DEFAULT_DNF_LIMIT,
    _dedupe,
    factor_common,
    make_conjunction,
    normalize_atom,
    simplify,
    substitute,
    to_disjoint_dnf,
    to_dnf,
    to_nnf,
)
from .qelim import RelationalAtomError, _sigma1_step, choose_witness, eliminate_all, split_literals

# Assertion bookkeeping for the nested-loop skip bound; see NestedLoop.
CASE2_STATS = {"loops": 0, "tuples": 0, "max_skip_run": 0, "max_ratio": 0.0, "violations": 0}


def reset_case2_stats() -> None:
    CASE2_STATS.update(loops=0, tuples=0, max_skip_run=0, max_ratio=0.0, violations=0)


class Enumerator:
    """Single-consumer two-phase cursor."""

    def __init__(self, meter: StepMeter):
        self.meter = meter
        self.prepared = False
        self.exhausted = False

    def precompute(self) -> None:
        if not self.prepared:
            self.prepared = True
            self._precompute()

    def _precompute(self) -> None:
        pass

    def next(self) -> Optional[tuple]:
        if not self.prepared:
            raise RuntimeError("precompute() must run before next()")
        self.meter.tick()
        if self.exhausted:
            return None
        t = self._next()
        if t is None:
            self.exhausted = True
        return t

    def _next(self) -> Optional[tuple]:
        raise NotImplementedError

    def is_empty(self) -> bool:
        """Known to produce nothing; only meaningful after precompute."""
        return False

    def __iter__(self):
        self.precompute()
        while True:
            t = self.next()
            if t is None:
                return
            yield t


class Empty(Enumerator):
    def _next(self):
        return None

    def is_empty(self):
        return True


class Walk(Enumerator):
    """Walk a materialized list."""

    def __init__(self, items: Sequence[tuple], meter: StepMeter):
        super().__init__(meter)
        self.items = items
        self.pos = 0

    def _next(self):
        if self.pos >= len(self.items):
            return None
        self.pos += 1
        return self.items[self.pos - 1]

    def is_empty(self):
        return not self.items


class LinearScan(Enumerator):
    """One-variable conjunction: one domain pass during precompute."""

    def __init__(self, literals, var: str, S: BijStructure, meter: StepMeter):
        super().__init__(meter)
        self.literals, self.var, self.S = tuple(literals), var, S
        self.items: list = []
        self.pos = 0

    def _precompute(self):
        self.items = scan(self.S, self.literals, self.var, self.meter)

    def _next(self):
        if self.pos >= len(self.items):
            return None
        self.pos += 1
        return (self.items[self.pos - 1],)

    def is_empty(self):
        return not self.items


class Guard(Enumerator):
    """Evaluate closed literals once during precompute, then defer to ``child``."""

    def __init__(self, closed, child: Enumerator, S: BijStructure, meter: StepMeter):
        super().__init__(meter)
        self.closed, self.child, self.S = tuple(closed), child, S
        self.ok = True

    def _precompute(self):
        self.ok = all(eval_qf(self.S, {}, lit, self.meter) for lit in self.closed)
        if self.ok:
            self.child.precompute()

    def _next(self):
        return self.child.next() if self.ok else None

    def is_empty(self):
        return not self.ok or self.child.is_empty()


class Decorate(Enumerator):
    """Append ``word(a_i)`` to every tuple of ``child``."""

    def __init__(self, child: Enumerator, index: int, word, S: BijStructure, meter: StepMeter):
        super().__init__(meter)
        self.child, self.index, self.word, self.S = child, index, word, S

    def _precompute(self):
        self.child.precompute()

    def _next(self):
        a = self.child.next()
        if a is None:
            return None
        return a + (self.S.apply_word(self.word, a[self.index], self.meter),)

    def is_empty(self):
        return self.child.is_empty()


class Append(Enumerator):
    """Append a fixed element to every tuple of ``child``."""

    def __init__(self, child: Enumerator, value: int, meter: StepMeter):
        super().__init__(meter)
        self.child, self.value = child, value

    def _precompute(self):
        self.child.precompute()

    def _next(self):
        a = self.child.next()
        return None if a is None else a + (self.value,)

    def is_empty(self):
        return self.child.is_empty()


class DisjointUnion(Enumerator):
    """Drain parts left to right; parts must have disjoint results."""

    def __init__(self, parts: Sequence[Enumerator], meter: StepMeter):
        super().__init__(meter)
        self.parts = list(parts)
        self.current = 0

    def _precompute(self):
        for p in self.parts:
            p.precompute()
        self.parts = [p for p in self.parts if not p.is_empty()]

    def _next(self):
        while self.current < len(self.parts):
            t = self.parts[self.current].next()
            if t is not None:
                return t
            self.current += 1
        return None

    def is_empty(self):
        return not self.parts


class OrderedMerge(Enumerator):
    """Union of lexicographically ordered parts, duplicates removed.

    Each step pops the smallest head and advances every part sharing it,
    so the delay is bounded by the number of parts times their delay.
    """

    def __init__(self, parts: Sequence[Enumerator], meter: StepMeter):
        super().__init__(meter)
        self.parts = list(parts)
        self.heap: list = []

    def _precompute(self):
        for i, p in enumerate(self.parts):
            p.precompute()
            if not p.is_empty():
                t = p.next()
                if t is not None:
                    self.heap.append((t, i))
        heapq.heapify(self.heap)

    def _next(self):
        if not self.heap:
            return None
        t, i = heapq.heappop(self.heap)
        self._advance(i)
        while self.heap and self.heap[0][0] == t:
            _, j = heapq.heappop(self.heap)
            self._advance(j)
        self.meter.tick(len(self.parts))
        return t

    def _advance(self, i):
        nxt = self.parts[i].next()
        if nxt is not None:
            heapq.heappush(self.heap, (nxt, i))

    def is_empty(self):
        return not self.heap


class NestedLoop(Enumerator):
    """``for a in child: for b in q2: emit (a, b) unless b is forbidden``.

    ``forbidden`` lists ``(index, word)`` pairs: ``b`` may not equal
    ``word(a[index])``.  Requires ``len(q2) > len(forbidden)``.
    """

    def __init__(self, child: Enumerator, q2: list, forbidden, S: BijStructure, meter: StepMeter):
        super().__init__(meter)
        self.child, self.q2, self.forbidden, self.S = child, q2, list(forbidden), S
        self.r = len(self.forbidden)
        self.cur: Optional[tuple] = None
        self.bad: list = []
        self.pos = 0
        self.emitted_for_cur = 0
        CASE2_STATS["loops"] += 1

    def _precompute(self):
        self.child.precompute()

    def is_empty(self):
        return self.child.is_empty()

    def _load(self) -> bool:
        if self.cur is not None:
            assert self.emitted_for_cur >= len(self.q2) - self.r, "case-2 emission count below |Q2| - r"
        a = self.child.next()
        if a is None:
            self.cur = None
            return False
        self.cur = a
        self.bad = [self.S.apply_word(w, a[i], self.meter) for i, w in self.forbidden]
        self.pos = 0
        self.emitted_for_cur = 0
        return True

    def _next(self):
        run = 0
        meter = self.meter
        while True:
            if self.cur is None or self.pos >= len(self.q2):
                if not self._load():
                    self._record(run)
                    return None
            b = self.q2[self.pos]
            self.pos += 1
            meter.tick(1 + self.r)
            if b in self.bad:
                run += 1
                continue
            self._record(run)
            self.emitted_for_cur += 1
            CASE2_STATS["tuples"] += 1
            return self.cur + (b,)

    def _record(self, run: int):
        if run > CASE2_STATS["max_skip_run"]:
            CASE2_STATS["max_skip_run"] = run
        if self.r:
            CASE2_STATS["max_ratio"] = max(CASE2_STATS["max_ratio"], run / (2 * self.r))
        if run > 2 * self.r:
            CASE2_STATS["violations"] += 1
        assert run <= 2 * self.r, f"case-2 skip run {run} exceeds 2r = {2 * self.r}"


class AllNegative(Enumerator):
    """Case 2: choose between the small-``Q2`` union and the nested loop during precompute."""

    def __init__(self, outer, psi2, diseqs, vars_, S, meter, ordered):
        super().__init__(meter)
        self.outer, self.psi2, self.diseqs = tuple(outer), tuple(psi2), list(diseqs)
        self.vars, self.S, self.ordered = tuple(vars_), S, ordered
        self.inner: Enumerator = Empty(meter)

    def _precompute(self):
        y = self.vars[-1]
        q2 = scan(self.S, self.psi2, y, self.meter)
        r = len(self.diseqs)
        xs = self.vars[:-1]
        if len(q2) <= r:
            parts = []
            for b in q2:
                elem = Term(b, (), ELEM)
                lits = list(self.outer) + [
                    normalize_atom(_neq(elem, t)) for t in self.diseqs
                ]
                sub = build_conjunction(lits, xs, self.S, self.meter, self.ordered)
                parts.append(Append(sub, b, self.meter))
            self.inner = OrderedMerge(parts, self.meter) if self.ordered else DisjointUnion(parts, self.meter)
        else:
            child = build_conjunction(self.outer, xs, self.S, self.meter, self.ordered)
            index = {v: i for i, v in enumerate(xs)}
            forbidden = [(index[t.var], t.word) for t in self.diseqs]
            self.inner = NestedLoop(child, q2, forbidden, self.S, self.meter)
        self.inner.precompute()

    def _next(self):
        return self.inner.next()

    def is_empty(self):
        return self.inner.is_empty()


def _neq(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


# --------------------------------------------------------------------------
# builders


def from_linear_scan(literals, var: str, S: BijStructure, meter: Optional[StepMeter] = None) -> Enumerator:
    """Enumerator for a one-variable conjunction (closed literals allowed)."""
    meter = meter or StepMeter()
    for lit in literals:
        extra = [v for v in free_vars(lit) if v != var]
        if extra:
            raise FormulaError(f"linear scan over {var!r} but literal mentions {extra}")
    return build_conjunction(literals, (var,), S, meter)


def build_conjunction(literals, vars_, S: BijStructure, meter: StepMeter, ordered: bool = False) -> Enumerator:
    """Enumerator for a conjunction of bijective literals over ``vars_``."""
    lits = make_conjunction(normalize_literal(l) for l in literals)
    if lits is None:
        return Empty(meter)
    vars_ = tuple(vars_)
    closed = [l for l in lits if not free_vars(l)]
    open_ = [l for l in lits if free_vars(l)]
    for lit in open_:
        stray = [v for v in free_vars(lit) if v not in vars_]
        if stray:
            raise FormulaError(f"literal {to_text(lit)} mentions variables {stray} outside {vars_}")
    inner = _build_open(open_, vars_, S, meter, ordered)
    if closed:
        return Guard(closed, inner, S, meter)
    return inner


def normalize_literal(lit: Formula) -> Formula:
    if isinstance(lit, Not):
        return negate(normalize_atom(lit.body))
    return normalize_atom(lit)


def _build_open(lits, vars_, S, meter, ordered) -> Enumerator:
    k = len(vars_)
    if k == 0:
        return Walk([()], meter)
    if k == 1:
        return LinearScan(lits, vars_[0], S, meter)
    y = vars_[-1]
    xs = vars_[:-1]
    outer, psi2, witnesses, diseqs = split_literals(lits, y)
    if witnesses:
        w = choose_witness(witnesses)
        rest = list(outer)
        rest += [substitute(l, y, w) for l in psi2]
        rest += [normalize_atom(_eq(w, t)) for t in witnesses if t is not w]
        rest += [normalize_atom(_neq(w, t)) for t in diseqs]
        child = build_conjunction(rest, xs, S, meter, ordered)
        return Decorate(child, xs.index(w.var), w.word, S, meter)
    return AllNegative(outer, psi2, diseqs, vars_, S, meter, ordered)


def _eq(a: Term, b: Term) -> Formula:
    return Eq(a, b)


def enum_conjunction(literals, vars_, S: BijStructure, meter: Optional[StepMeter] = None) -> Enumerator:
    """Constant-delay enumerator of the tuples over ``vars_`` satisfying the conjunction."""
    return build_conjunction(literals, vars_, S, meter or StepMeter())


def disjoint_union(parts: Sequence[Enumerator], meter: Optional[StepMeter] = None) -> Enumerator:
    if meter is None:
        meter = parts[0].meter if parts else StepMeter()
    return DisjointUnion(parts, meter)


# --------------------------------------------------------------------------
# queries


DISJOINT_LIMIT = 2048
DISJOINT_WORK = 20_000
DISJOINT_MAX_INPUT = 64


@dataclass
class CompiledQuery:
    """Structure-independent part of query evaluation.

    With ``elimination="syntactic"`` the quantifier-free equivalent is
    computed here once.  With ``"structure"`` elimination is deferred to
    precompute, where variables without a witness are handled by scanning
    the structure (linear time per scan, a formula-bounded number of scans).
    """

    formula: Formula
    variables: tuple
    eliminated: Optional[Formula]
    union: str = "auto"
    elimination: str = "syntactic"


def compile_query(
    phi: Formula,
    union: str = "auto",
    variables: Optional[tuple] = None,
    elimination: str = "syntactic",
) -> CompiledQuery:
    if union not in ("auto", "disjoint", "merge"):
        raise ValueError(f"unknown union mode {union!r}")
    if elimination not in ("syntactic", "structure"):
        raise ValueError(f"unknown elimination mode {elimination!r}")
    variables = tuple(variables) if variables is not None else free_vars(phi)
    stray = [v for v in free_vars(phi) if v not in variables]
    if stray:
        raise FormulaError(f"free variables {stray} missing from the output order")
    eliminated = eliminate_all(phi) if elimination == "syntactic" else None
    return CompiledQuery(phi, variables, eliminated, union, elimination)


def decide_closed(phi: Formula, S: BijStructure, meter: StepMeter) -> Formula:
    """Replace every maximal closed subformula of a quantifier-free ``phi`` by its truth value."""
    if phi in (TRUE, FALSE):
        return phi
    if not free_vars(phi):
        return TRUE if eval_qf(S, {}, phi, meter) else FALSE
    if isinstance(phi, Not):
        return simplify(Not(decide_closed(phi.body, S, meter)))
    if isinstance(phi, (And, Or)):
        return simplify(type(phi)(tuple(decide_closed(p, S, meter) for p in phi.parts)))
    return phi


def materialize_unary(qf: Formula, S: BijStructure, meter: StepMeter):
    """Replace compound one-variable subformulas by fresh monadic predicates.

    Each maximal quantifier-free subformula with exactly one free variable
    that is not already a literal is evaluated over the whole domain in one
    vectorized scan and becomes ``_P<i>(x)`` on an extended copy of ``S``.
    Returns the rewritten formula and the extended structure.
    """
    masks: dict = {}
    names: dict = {}

    def walk(f: Formula) -> Formula:
        if isinstance(f, (And, Or, Not)):
            fv = free_vars(f)
            if len(fv) == 1 and not (isinstance(f, Not) and not isinstance(f.body, (And, Or, Not))):
                v = fv[0]
                key = (v, f)
                if key not in names:
                    mask = eval_vector(S, f, v, meter)
                    if not mask.any():
                        names[key] = FALSE
                    elif mask.all():
                        names[key] = TRUE
                    else:
                        name = f"_P{len(masks)}"
                        while name in S.predicates:
                            name = "_" + name
                        masks[name] = mask
                        names[key] = Pred(name, Term(v))
                return names[key]
            if isinstance(f, Not):
                return Not(walk(f.body))
            return type(f)(tuple(walk(p) for p in f.parts))
        return f

    out = simplify(walk(qf))
    if not masks:
        return out, S
    meter.tick(S.size * len(masks))
    preds = dict(S.predicates)
    preds.update(masks)
    return out, BijStructure(S.size, dict(S.functions), preds, dict(S.constants), S.names)


class SatisfiabilityTest:
    """Whether a conjunction has a solution on one structure, memoized.

    A test is one enumerator precompute, so it costs linear time; literals
    the test cannot build (for instance cardinality atoms with extra free
    variables) make it answer ``True``.
    """

    def __init__(self, S: BijStructure, meter: StepMeter):
        self.S, self.meter = S, meter
        self.memo: dict = {}
        self.tests = 0

    def __call__(self, lits, ctx: Optional[dict] = None) -> bool:
        lits = list(lits)
        if ctx:
            mentioned = set()
            for lit in lits:
                mentioned.update(free_vars(lit))
            lits += [l for v in sorted(mentioned) for l in ctx.get(v, ())]
        c = make_conjunction(lits)
        if c is None:
            return False
        key = frozenset(c)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.tests += 1
        vars_: list = []
        for lit in c:
            for v in free_vars(lit):
                if v not in vars_:
                    vars_.append(v)
        try:
            e = build_conjunction(c, vars_, self.S, self.meter)
            e.precompute()
            ok = not e.is_empty()
        except (FormulaError, ResourceLimitError):
            ok = True
        self.memo[key] = ok
        return ok


def to_dnf_pruned(phi: Formula, sat: SatisfiabilityTest, ctx: Optional[dict] = None, limit: int = DEFAULT_DNF_LIMIT):
    """DNF of a quantifier-free ``phi`` without the conjunctions that have no solution on ``sat.S``.

    Partial products are tested as they are built, smallest factors first,
    so dead branches are cut before they multiply.  One-variable literals
    in ``ctx``, and those found conjoined on the way down, are assumed to
    hold and join every test.  Negations are expanded into disjoint
    branches (``!a | (a & !b)`` rather than ``!a | !b``), which keeps the
    number of satisfiable conjunctions close to the number of distinct
    ways a solution can arise.
    """
    return tuple(_dnf_pruned(phi, sat, ctx or {}, limit))


def _product(factors, sat, ctx, limit) -> list:
    acc = [()]
    for sub in sorted(factors, key=len):
        nxt = []
        for c1 in acc:
            for c2 in sub:
                c = make_conjunction(c1 + c2)
                if c is not None and sat(c, ctx):
                    nxt.append(c)
        acc = _dedupe(nxt)
        if len(acc) > limit:
            raise ResourceLimitError(f"DNF exceeds {limit} conjunctions")
        if not acc:
            break
    return acc


def _dnf_pruned(phi: Formula, sat, ctx, limit) -> list:
    if phi == TRUE:
        return [()]
    if phi == FALSE:
        return []
    if isinstance(phi, And):
        local = _unary_context(ctx, phi.parts)
        return _product([_dnf_pruned(p, sat, local, limit) for p in phi.parts], sat, ctx, limit)
    if isinstance(phi, Or):
        acc = []
        for p in phi.parts:
            acc.extend(_dnf_pruned(p, sat, ctx, limit))
        return _dedupe(acc)
    if isinstance(phi, Not) and not is_atom(phi.body):
        inner = _dnf_pruned(phi.body, sat, ctx, limit)
        factors = []
        for c in inner:
            if not c:
                return []
            factors.append([c[:i] + (negate(c[i]),) for i in range(len(c))])
        return _product(factors, sat, ctx, limit)
    c = make_conjunction((normalize_literal(phi),))
    return [] if c is None or not sat(c, ctx) else [c]


def _unary_context(ctx: dict, parts) -> dict:
    out = dict(ctx)
    for p in parts:
        if is_literal(p):
            fv = free_vars(p)
            if len(fv) == 1:
                out[fv[0]] = out.get(fv[0], ()) + (normalize_literal(p),)
    return out


def _without(ctx: dict, v: str) -> dict:
    return {k: ls for k, ls in ctx.items() if k != v} if v in ctx else ctx


def eliminate_on_structure(phi: Formula, S: BijStructure, meter: StepMeter, sat: Optional[SatisfiabilityTest] = None) -> Formula:
    """Quantifier-free formula equivalent to ``phi`` on ``S``.

    Every quantified variable is removed from each conjunction of its
    body's DNF by witness substitution or by scanning its one-variable
    part (see :func:`constdelay.qelim.eliminate_one_on`).  The DNF is
    pruned on ``S`` under the one-variable literals that sibling conjuncts
    guarantee, which is what keeps reduced relational atoms from
    multiplying out.
    """
    sat = sat or SatisfiabilityTest(S, meter)
    cache: dict = {}

    def rec(f: Formula, ctx: dict) -> Formula:
        if isinstance(f, Rel):
            raise RelationalAtomError(f"relational atom {to_text(f)}; run the degree reduction first")
        if isinstance(f, Card):
            return normalize_atom(Card(f.k, f.var, rec(f.body, _without(ctx, f.var))))
        if is_atom(f):
            return normalize_atom(f)
        if isinstance(f, Not):
            return simplify(Not(rec(f.body, ctx)))
        if isinstance(f, And):
            local = _unary_context(ctx, f.parts)
            return simplify(And(tuple(rec(p, local) for p in f.parts)))
        if isinstance(f, Or):
            return simplify(Or(tuple(rec(p, ctx) for p in f.parts)))
        if isinstance(f, Forall):
            return simplify(Not(rec(Exists(f.var, Not(f.body)), ctx)))
        if isinstance(f, Exists):
            y = f.var
            inner = _without(ctx, y)
            body = rec(f.body, inner)
            out = []
            for c in to_dnf_pruned(body, sat, inner):
                for c2 in _sigma1_step(c, y, S, cache, meter):
                    if sat(c2, inner):
                        out.append(c2)
            return factor_common(simplify(disj(conj(c) for c in _dedupe(out))))
        raise TypeError(f"not a formula: {f!r}")

    return rec(phi, {})


def split_query(qf: Formula, union: str, dnf: Optional[tuple] = None):
    """Conjunctions covering ``qf`` and the union mode they need.

    ``"disjoint"`` makes the conjunctions pairwise disjoint; ``"merge"``
    keeps the plain DNF and removes duplicates by merging lexicographically
    ordered streams; ``"auto"`` tries the former and falls back to the
    latter for DNFs above ``DISJOINT_MAX_INPUT`` conjunctions, or when the
    disjoint form outgrows ``DISJOINT_LIMIT`` or ``DISJOINT_WORK``.
    """
    if dnf is None:
        dnf = to_dnf(qf)
    if union == "merge":
        return dnf, "merge"
    try:
        if union == "auto":
            if len(dnf) > DISJOINT_MAX_INPUT:
                return dnf, "merge"
            return tuple(to_disjoint_dnf(dnf, DISJOINT_LIMIT, DISJOINT_WORK)), "disjoint"
        return tuple(to_disjoint_dnf(dnf, 10**6)), "disjoint"
    except ResourceLimitError:
        if union == "disjoint":
            raise
        return dnf, "merge"


class QueryEnumerator(Enumerator):
    """Closed parts are decided and the rest split into conjunctions during precompute."""

    def __init__(self, compiled: CompiledQuery, S: BijStructure, meter: StepMeter):
        super().__init__(meter)
        self.compiled, self.S = compiled, S
        self.mode: Optional[str] = None
        self.conjunctions: tuple = ()
        self.inner: Enumerator = Empty(meter)

    def _precompute(self):
        c = self.compiled
        S = self.S
        dnf = None
        if c.eliminated is None:
            qf = eliminate_on_structure(c.formula, S, self.meter)
            qf = decide_closed(qf, S, self.meter)
            qf, S = materialize_unary(qf, S, self.meter)
            dnf = to_dnf_pruned(qf, SatisfiabilityTest(S, self.meter))
        else:
            qf = decide_closed(c.eliminated, S, self.meter)
        self.structure = S
        self.conjunctions, self.mode = split_query(qf, self.compiled.union, dnf)
        ordered = self.mode == "merge"
        vars_ = self.compiled.variables
        parts = [build_conjunction(c, vars_, S, self.meter, ordered) for c in self.conjunctions]
        self.inner = OrderedMerge(parts, self.meter) if ordered else DisjointUnion(parts, self.meter)
        self.inner.precompute()

    def _next(self):
        return self.inner.next()

    def is_empty(self):
        return self.inner.is_empty()


def enum_query(
    phi,
    S: BijStructure,
    meter: Optional[StepMeter] = None,
    union: str = "auto",
    variables: Optional[tuple] = None,
    elimination: str = "syntactic",
) -> QueryEnumerator:
    """Enumerator of ``phi(S)`` over ``variables`` (default: free variables in first-occurrence order).

    ``phi`` may be a formula or a :class:`CompiledQuery`.  A closed formula
    yields the empty tuple once if it holds and nothing otherwise.
    """
    if isinstance(phi, CompiledQuery):
        compiled = phi
    else:
        compiled = compile_query(phi, union, variables, elimination)
    return QueryEnumerator(compiled, S, meter or StepMeter())


# --------------------------------------------------------------------------
# delay measurement


@dataclass
class DelayReport:
    precompute_steps: int
    tuples: int
    max_gap: int
    mean_gap: float
    final_gap: int
    total_steps: int
    gaps: list = field(default_factory=list, repr=False)
    precompute_seconds: float = 0.0
    enumerate_seconds: float = 0.0
    results: list = field(default_factory=list, repr=False)


def measure_delay(e: Enumerator, keep_results: bool = False, keep_gaps: bool = True) -> DelayReport:
    """Run ``e`` to exhaustion, recording the step gap before every emission and after the last."""
    meter = e.meter
    start = meter.steps
    t0 = time.perf_counter()
    e.precompute()
    t1 = time.perf_counter()
    pre = meter.steps - start
    gaps = []
    results = []
    last = meter.steps
    max_gap, total_gap, count = 0, 0, 0
    while True:
        t = e.next()
        now = meter.steps
        gap = now - last
        last = now
        if keep_gaps:
            gaps.append(gap)
        max_gap = max(max_gap, gap)
        total_gap += gap
        if t is None:
            final = gap
            break
        count += 1
        if keep_results:
            results.append(t)
    t2 = time.perf_counter()
    return DelayReport(
        precompute_steps=pre,
        tuples=count,
        max_gap=max_gap,
        mean_gap=total_gap / (count + 1),
        final_gap=final,
        total_steps=meter.steps - start,
        gaps=gaps,
        precompute_seconds=t1 - t0,
        enumerate_seconds=t2 - t1,
        results=results,
    )
