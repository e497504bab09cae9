"""From bounded-degree relational structures to bijective ones.

Every element ``x`` gets ``d`` copies ``(x,1)..(x,d)`` joined with ``x``
into one cycle of the permutation ``g``.  Every tuple becomes an element of
its own, and the involution ``f_j`` swaps the tuple with the copy of its
``j``-th component that was reserved for this occurrence.  A relational
atom ``R(x_1..x_k)`` then says: some ``t`` in ``T_R`` has ``f_j(t)`` among
the copies of ``x_j`` for every ``j``.

Index layout of the new domain, with ``n`` elements and degree ``d``::

    0 .. n-1                      original elements (predicate D)
    n + x*d + (h-1)               copy (x, h), 1 <= h <= d
    n*(d+1) + offset_R + i        i-th stored tuple of R (predicate T_R)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bij_structure import (
    BijStructure,
    StepMeter,
    StructureError,
    _content_lines,
    _resolve_elem,
    dump_structure,
)
from .enumeration import Enumerator, enum_query
from .formula import (
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
    Signature,
    Term,
    TrueF,
    all_variables,
    conj,
    disj,
    free_vars,
    fresh_name,
    subformulas,
)

DOMAIN_PREDICATE = "D"
CYCLE_FUNCTION = "g"


def tuple_predicate(relation: str) -> str:
    return f"T_{relation}"


def position_function(j: int) -> str:
    return f"f{j}"


@dataclass
class RelStructure:
    """Finite relational structure over elements ``0..size-1``.

    ``relations`` maps a name to ``(arity, tuples)``.  Tuples keep their
    stored order; a repeated tuple is kept once, at its first position.
    """

    size: int
    relations: dict = field(default_factory=dict)
    names: Optional[list] = None

    def __post_init__(self):
        n = self.size
        if n < 0:
            raise StructureError("domain size must be non-negative")
        if self.names is not None and len(self.names) != n:
            raise StructureError(f"expected {n} element names, got {len(self.names)}")
        clean = {}
        degrees = [0] * n
        for name, (arity, tuples) in self.relations.items():
            if arity < 1:
                raise StructureError(f"relation {name!r}: arity must be at least 1")
            seen, kept = set(), []
            for t in tuples:
                t = tuple(int(a) for a in t)
                if len(t) != arity:
                    raise StructureError(f"relation {name!r} has arity {arity}, got tuple {t}")
                for a in t:
                    if not 0 <= a < n:
                        raise StructureError(f"relation {name!r}: element {a} outside domain of size {n}")
                if t in seen:
                    continue
                seen.add(t)
                kept.append(t)
                for a in t:
                    degrees[a] += 1
            clean[name] = (arity, tuple(kept))
        self.relations = clean
        self.degrees = degrees

    @property
    def signature(self) -> Signature:
        return Signature(relations={name: arity for name, (arity, _) in self.relations.items()})

    @property
    def max_arity(self) -> int:
        return max((a for a, _ in self.relations.values()), default=0)

    @property
    def tuple_count(self) -> int:
        return sum(len(ts) for _, ts in self.relations.values())

    def element_name(self, a: int) -> str:
        return self.names[a] if self.names is not None else str(a)


def degree(S: RelStructure) -> tuple:
    """``(d, d1)``: maximal occurrence count and maximal number of distinct neighbours.

    The occurrence count of ``x`` counts every position of every tuple
    holding ``x``, so a reflexive pair counts twice.
    """
    n = S.size
    d = max(S.degrees, default=0)
    neighbours = [set() for _ in range(n)]
    for _, tuples in S.relations.values():
        for t in tuples:
            for a in t:
                for b in t:
                    if b != a:
                        neighbours[a].add(b)
    d1 = max((len(s) for s in neighbours), default=0)
    q, m = len(S.relations), S.max_arity
    assert d1 <= max(m - 1, 0) * d, (d, d1)
    assert d <= q * m * (d1 + 1) ** max(m - 1, 0), (d, d1)
    return d, d1


@dataclass
class ReducedStructure:
    """A bijective structure built from a relational one, with index bookkeeping."""

    structure: BijStructure
    source: RelStructure
    d: int
    m: int
    tuple_offsets: dict  # relation -> first index of its tuple block
    steps: int = 0

    @property
    def n(self) -> int:
        return self.source.size

    def copy_index(self, x: int, h: int) -> int:
        if not 1 <= h <= self.d:
            raise IndexError(f"copy {h} out of range 1..{self.d}")
        return self.n + x * self.d + (h - 1)

    def tuple_index(self, relation: str, i: int) -> int:
        return self.tuple_offsets[relation] + i

    def describe(self, z: int) -> str:
        """Human-readable meaning of a reduced element."""
        n, d = self.n, self.d
        if z < n:
            return self.source.element_name(z)
        if z < n * (d + 1):
            x, h = divmod(z - n, d)
            return f"({self.source.element_name(x)},{h + 1})"
        for name, off in self.tuple_offsets.items():
            tuples = self.source.relations[name][1]
            if off <= z < off + len(tuples):
                args = ",".join(self.source.element_name(a) for a in tuples[z - off])
                return f"{name}({args})"
        raise IndexError(z)

    def original(self, z: int) -> int:
        if not 0 <= z < self.n:
            raise ValueError(f"element {z} is not an original element")
        return z


def build_bijective(S: RelStructure, d: Optional[int] = None, meter: Optional[StepMeter] = None) -> ReducedStructure:
    """Single pass over the tuples; ``d`` defaults to the structure's degree.

    A larger ``d`` than necessary is accepted (spare copies are fixed by
    every ``f_j``); a smaller one is an error.
    """
    meter = meter or StepMeter()
    actual = max(S.degrees, default=0)
    if d is None:
        d = actual
    elif d < actual:
        raise ValueError(f"degree bound {d} is below the structure's degree {actual}")
    n = S.size
    m = S.max_arity
    size = (d + 1) * n + S.tuple_count

    g = list(range(size))
    for x in range(n):
        if d:
            g[x] = n + x * d
            for h in range(1, d):
                g[n + x * d + h - 1] = n + x * d + h
            g[n + x * d + d - 1] = x
        meter.tick(d + 1)

    fs = [list(range(size)) for _ in range(m)]
    used = [0] * n
    offsets = {}
    preds = {DOMAIN_PREDICATE: np.zeros(size, dtype=bool)}
    preds[DOMAIN_PREDICATE][:n] = True
    base = n * (d + 1)
    for name, (arity, tuples) in S.relations.items():
        offsets[name] = base
        mask = np.zeros(size, dtype=bool)
        mask[base : base + len(tuples)] = True
        pname = tuple_predicate(name)
        if pname in preds:
            raise StructureError(f"relation names clash on predicate {pname!r}")
        preds[pname] = mask
        for i, t in enumerate(tuples):
            z = base + i
            for j, x in enumerate(t):
                used[x] += 1
                h = used[x]
                assert h <= d, f"occurrence {h} of element {x} exceeds degree {d}"
                c = n + x * d + (h - 1)
                fs[j][z] = c
                fs[j][c] = z
            meter.tick(1 + arity)
        base += len(tuples)

    funcs = {CYCLE_FUNCTION: g}
    for j in range(m):
        funcs[position_function(j + 1)] = fs[j]
    names = None
    if S.names is not None:
        names = list(S.names) + [f"_{i}" for i in range(n, size)]
    bij = BijStructure(size, funcs, preds, {}, names)
    return ReducedStructure(bij, S, d, m, offsets, meter.steps)


# --------------------------------------------------------------------------
# formulas


def _g_power(v: str, h: int) -> Term:
    return Term(v, ((CYCLE_FUNCTION, 1),) * h)


def translate_atom(atom: Rel, d: int, t: str = "t", arity: Optional[int] = None) -> Formula:
    """``exists t. T_R(t) & AND_j OR_{h=1..d} f_j(t) = g^h(x_j)``."""
    if not atom.args:
        raise FormulaError("relations must have arity at least 1")
    if arity is not None and len(atom.args) != arity:
        raise FormulaError(f"relation {atom.name!r} has arity {arity}, got {len(atom.args)} arguments")
    if t in atom.args:
        raise FormulaError(f"tuple variable {t!r} clashes with an argument")
    parts = [Pred(tuple_predicate(atom.name), Term(t))]
    for j, x in enumerate(atom.args, 1):
        fj = Term(t, ((position_function(j), 1),))
        parts.append(disj(Eq(fj, _g_power(x, h)) for h in range(1, d + 1)))
    return Exists(t, conj(parts))


def translate_formula(phi: Formula, sig: Signature, d: int, variables: Optional[tuple] = None) -> Formula:
    """Bijective formula defining the same relation on the reduced structure.

    Quantifiers range over ``D`` only, relational atoms are replaced by
    their translations and every free variable (and every name in
    ``variables``) is required to lie in ``D``.
    """
    taken = set(all_variables(phi)) | set(variables or ())

    def fresh() -> str:
        name = fresh_name("t", taken)
        taken.add(name)
        return name

    in_d = lambda v: Pred(DOMAIN_PREDICATE, Term(v))  # noqa: E731

    def walk(f: Formula) -> Formula:
        if isinstance(f, Rel):
            if f.name not in sig.relations:
                raise FormulaError(f"relation {f.name!r} not in the signature")
            return translate_atom(f, d, fresh(), sig.relations[f.name])
        if isinstance(f, (TrueF, FalseF)):
            return f
        if isinstance(f, Eq):
            if f.left.word or f.right.word or f.left.kind != "var" or f.right.kind != "var":
                raise FormulaError("relational formulas only compare variables")
            return f
        if isinstance(f, Pred):
            raise FormulaError(f"unary symbol {f.name!r} must be declared as a relation")
        if isinstance(f, Not):
            return Not(walk(f.body))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(walk(p) for p in f.parts))
        if isinstance(f, Exists):
            return Exists(f.var, And((in_d(f.var), walk(f.body))))
        if isinstance(f, Forall):
            return Forall(f.var, Or((Not(in_d(f.var)), walk(f.body))))
        if isinstance(f, Card):
            return Card(f.k, f.var, And((in_d(f.var), walk(f.body))))
        raise TypeError(f"not a formula: {f!r}")

    body = walk(phi)
    names = list(free_vars(phi))
    names += [v for v in (variables or ()) if v not in names]
    guards = [in_d(v) for v in names]
    return conj([body] + guards) if guards else body


class _BackMapped(Enumerator):
    def __init__(self, inner: Enumerator, reduced: ReducedStructure):
        super().__init__(inner.meter)
        self.inner, self.reduced = inner, reduced

    def _precompute(self):
        self.inner.precompute()

    def _next(self):
        t = self.inner.next()
        if t is None:
            return None
        if __debug__:
            for z in t:
                self.reduced.original(z)
        return t

    def is_empty(self):
        return self.inner.is_empty()


class RelationalQuery(Enumerator):
    """Reduction, translation and bijective enumeration, all inside precompute."""

    def __init__(
        self,
        phi: Formula,
        S: RelStructure,
        meter: StepMeter,
        union: str = "auto",
        elimination: str = "structure",
        variables: Optional[tuple] = None,
    ):
        super().__init__(meter)
        self.phi, self.S, self.union, self.elimination = phi, S, union, elimination
        self.variables = tuple(variables) if variables is not None else free_vars(phi)
        self.reduced: Optional[ReducedStructure] = None
        self.translated: Optional[Formula] = None
        self.inner: Enumerator = None

    def _precompute(self):
        self.reduced = build_bijective(self.S, meter=self.meter)
        self.translated = translate_formula(self.phi, self.S.signature, self.reduced.d, self.variables)
        q = enum_query(
            self.translated, self.reduced.structure, self.meter, self.union, self.variables, self.elimination
        )
        self.inner = _BackMapped(q, self.reduced)
        self.inner.precompute()

    def _next(self):
        return self.inner.next()

    def is_empty(self):
        return self.inner.is_empty()


def enum_fo_deg(
    phi: Formula,
    S: RelStructure,
    meter: Optional[StepMeter] = None,
    union: str = "auto",
    elimination: str = "structure",
    variables: Optional[tuple] = None,
) -> RelationalQuery:
    """Enumerate ``phi(S)`` for a relational ``phi``.

    Tuples follow ``variables`` (default: free variables in first-occurrence
    order).

    Elimination defaults to the structure-aware mode: negated relational
    atoms turn into up to ``d*d`` disequalities on one variable, far past
    what the syntactic expansion can handle.
    """
    for f in _relation_names(phi):
        if f not in S.relations:
            raise FormulaError(f"relation {f!r} not in the structure")
    return RelationalQuery(phi, S, meter or StepMeter(), union, elimination, variables)


def _relation_names(phi: Formula):
    return {f.name for f in subformulas(phi) if isinstance(f, Rel)}


# --------------------------------------------------------------------------
# files


def load_rel_structure(text: str, source: str = "<structure>") -> RelStructure:
    """Parse ``domain <n>``, optional ``names ...``, then ``rel <name> <arity>`` blocks of tuples closed by ``end``."""
    n = None
    names = None
    names_index: dict = {}
    relations: dict = {}
    current = None
    first = True
    for lineno, words in _content_lines(text):
        key = words[0]
        if first and key == "format":
            if words[1:] != ["1"]:
                raise StructureError(f"unsupported format {' '.join(words[1:])!r}", lineno, source)
            first = False
            continue
        first = False
        if current is not None:
            name, arity, tuples = current
            if key == "end":
                relations[name] = (arity, tuples)
                current = None
                continue
            if len(words) != arity:
                raise StructureError(f"relation {name!r} has arity {arity}, got {len(words)} elements", lineno, source)
            tuples.append(tuple(_resolve_elem(w, names_index, n, lineno, source) for w in words))
            continue
        if key == "domain":
            if n is not None or len(words) != 2:
                raise StructureError("expected a single 'domain <n>' line", lineno, source)
            n = int(words[1])
            continue
        if n is None:
            raise StructureError("'domain <n>' must come first", lineno, source)
        if key == "names":
            if len(words) - 1 != n or len(set(words[1:])) != n:
                raise StructureError(f"'names' needs {n} distinct names", lineno, source)
            names = words[1:]
            names_index = {a: i for i, a in enumerate(names)}
        elif key == "rel":
            if len(words) != 3:
                raise StructureError("expected 'rel <name> <arity>'", lineno, source)
            name = words[1]
            try:
                arity = int(words[2])
            except ValueError:
                raise StructureError(f"bad arity {words[2]!r}", lineno, source) from None
            if arity < 1:
                raise StructureError(f"relation {name!r}: arity must be at least 1", lineno, source)
            if name in relations:
                raise StructureError(f"relation {name!r} defined twice", lineno, source)
            current = (name, arity, [])
        else:
            raise StructureError(f"unknown directive {key!r}", lineno, source)
    if current is not None:
        raise StructureError(f"relation {current[0]!r} is missing its 'end' line", None, source)
    if n is None:
        raise StructureError("missing 'domain <n>' line", None, source)
    return RelStructure(n, relations, names)


def dump_rel_structure(S: RelStructure) -> str:
    lines = ["format 1", f"domain {S.size}"]
    if S.names is not None:
        lines.append("names " + " ".join(S.names))
    for name, (arity, tuples) in S.relations.items():
        lines.append(f"rel {name} {arity}")
        lines.extend(" ".join(str(a) for a in t) for t in tuples)
        lines.append("end")
    return "\n".join(lines) + "\n"


def dump_reduced(R: ReducedStructure) -> str:
    """Bijective structure file followed by the element mapping as comments."""
    S = R.structure
    plain = BijStructure(S.size, dict(S.functions), dict(S.predicates), {}, None)
    lines = [dump_structure(plain).rstrip("\n"), f"# degree {R.d}, {R.n} elements, {R.source.tuple_count} tuples"]
    lines.append("# index meaning")
    lines.extend(f"# {z} {R.describe(z)}" for z in range(S.size))
    return "\n".join(lines) + "\n"
