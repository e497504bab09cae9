"""First-order formulas over relational and unary-functional signatures.

Formulas are immutable trees of frozen dataclasses.  Terms over a
unary-functional signature are stored as a *word* of signed function symbols
applied to a base, so ``f(g^-1(x))`` is ``Term('x', (('f', 1), ('g', -1)))``
with the outermost symbol first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

MAX_TERM_LENGTH = 2**16
MAX_CARDINALITY = 2**64 - 1


class FormulaError(ValueError):
    """Raised for ill-formed formulas or signature violations."""


class ResourceLimitError(RuntimeError):
    """Raised when an operation would exceed an explicit resource bound."""


# --------------------------------------------------------------------------
# signatures


@dataclass
class Signature:
    relations: dict[str, int] = field(default_factory=dict)
    functions: set[str] = field(default_factory=set)
    predicates: set[str] = field(default_factory=set)
    constants: set[str] = field(default_factory=set)

    def __post_init__(self):
        seen: set[str] = set()
        for group in (self.relations, self.functions, self.predicates, self.constants):
            for name in group:
                if name in seen:
                    raise FormulaError(f"symbol {name!r} declared twice")
                seen.add(name)
        for name, arity in self.relations.items():
            if arity < 1:
                raise FormulaError(f"relation {name!r} must have arity >= 1")
        if self.relations and (self.functions or self.predicates or self.constants):
            raise FormulaError("a signature is either relational or unary-functional")

    @property
    def kind(self) -> str:
        return "relational" if self.relations else "unary-functional"

    def symbols(self) -> set[str]:
        return set(self.relations) | self.functions | self.predicates | self.constants


# --------------------------------------------------------------------------
# terms

VAR, CONST, ELEM = "var", "const", "elem"
_KIND_ORDER = {VAR: 0, CONST: 1, ELEM: 2}

Word = tuple  # tuple[tuple[str, int], ...]


def invert_word(word: Word) -> Word:
    return tuple((f, -s) for f, s in reversed(word))


def reduce_word(word: Word) -> Word:
    """Cancel adjacent ``f f^-1`` pairs."""
    out: list = []
    for f, s in word:
        if out and out[-1][0] == f and out[-1][1] == -s:
            out.pop()
        else:
            out.append((f, s))
    return tuple(out)


@dataclass(frozen=True, order=True)
class Term:
    """A bijective term ``word(base)``.

    ``kind`` is ``var`` for variables, ``const`` for constant symbols and
    ``elem`` for domain elements injected during evaluation (``base`` is then
    an ``int``).
    """

    base: Union[str, int]
    word: Word = ()
    kind: str = VAR

    def __post_init__(self):
        if len(self.word) > MAX_TERM_LENGTH:
            raise ResourceLimitError(f"term longer than {MAX_TERM_LENGTH} symbols")

    @property
    def is_ground(self) -> bool:
        return self.kind != VAR

    @property
    def var(self):
        return self.base if self.kind == VAR else None

    def apply(self, word: Word) -> "Term":
        """Return ``word(self)``."""
        return Term(self.base, reduce_word(tuple(word) + self.word), self.kind)

    def sort_key(self):
        return (_KIND_ORDER[self.kind], str(self.base), self.word)

    def __str__(self) -> str:
        if self.kind == ELEM:
            s = f"@{self.base}"
        else:
            s = str(self.base)
        for f, sign in reversed(self.word):
            s = f"{f}({s})" if sign > 0 else f"{f}^-1({s})"
        return s


def var(name: str) -> Term:
    return Term(name)


def canonicalize_term(t: Term) -> Term:
    """Cancel every adjacent inverse pair in ``t``; idempotent."""
    return Term(t.base, reduce_word(t.word), t.kind)


# --------------------------------------------------------------------------
# atoms and connectives


class Formula:
    """Base class of the formula AST."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


def _cached_hash(self) -> int:
    # Compound nodes are hashed over and over by DNF deduplication.
    d = self.__dict__
    h = d.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(v for k, v in d.items() if k not in ("_hash", "_free")))
        object.__setattr__(self, "_hash", h)
    return h


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    term: Term

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    args: tuple  # tuple[str, ...] of variable names

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Card(Formula):
    """``#>= k var. body``: at least ``k`` elements satisfy ``body``."""

    k: int
    var: str
    body: Formula

    def __post_init__(self):
        if self.k < 0 or self.k > MAX_CARDINALITY:
            raise ResourceLimitError(f"cardinality bound {self.k} out of range")

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    __hash__ = _cached_hash


@dataclass(frozen=True)
class And(Formula):
    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    __hash__ = _cached_hash


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula

    __hash__ = _cached_hash


ATOMS = (TrueF, FalseF, Eq, Pred, Rel, Card)
QUANTIFIERS = (Exists, Forall)


def is_atom(phi: Formula) -> bool:
    return isinstance(phi, ATOMS)


def is_literal(phi: Formula) -> bool:
    return is_atom(phi) or (isinstance(phi, Not) and is_atom(phi.body))


def negate(lit: Formula) -> Formula:
    """Complement of a literal (no double negation)."""
    if isinstance(lit, Not):
        return lit.body
    if lit == TRUE:
        return FALSE
    if lit == FALSE:
        return TRUE
    return Not(lit)


def conj(parts) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(parts)


# --------------------------------------------------------------------------
# traversal


def atom_terms(a: Formula) -> tuple:
    if isinstance(a, Eq):
        return (a.left, a.right)
    if isinstance(a, Pred):
        return (a.term,)
    if isinstance(a, Rel):
        return tuple(Term(v) for v in a.args)
    return ()


def _walk_vars(phi: Formula, bound: frozenset, out: list, seen: set):
    if isinstance(phi, (Eq, Pred, Rel)):
        for t in atom_terms(phi):
            v = t.var
            if v is not None and v not in bound and v not in seen:
                seen.add(v)
                out.append(v)
    elif isinstance(phi, Card):
        _walk_vars(phi.body, bound | {phi.var}, out, seen)
    elif isinstance(phi, Not):
        _walk_vars(phi.body, bound, out, seen)
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            _walk_vars(p, bound, out, seen)
    elif isinstance(phi, QUANTIFIERS):
        _walk_vars(phi.body, bound | {phi.var}, out, seen)


def free_vars(phi: Formula) -> tuple:
    """Free variables in first-occurrence order."""
    cached = phi.__dict__.get("_free")
    if cached is None:
        out: list = []
        _walk_vars(phi, frozenset(), out, set())
        cached = phi.__dict__["_free"] = tuple(out)
    return cached


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, Not):
        yield from subformulas(phi.body)
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            yield from subformulas(p)
    elif isinstance(phi, (Exists, Forall, Card)):
        yield from subformulas(phi.body)


def is_quantifier_free(phi: Formula) -> bool:
    """True when no quantifier occurs outside cardinality bodies."""
    if isinstance(phi, QUANTIFIERS):
        return False
    if isinstance(phi, Not):
        return is_quantifier_free(phi.body)
    if isinstance(phi, (And, Or)):
        return all(is_quantifier_free(p) for p in phi.parts)
    return True


def all_variables(phi: Formula) -> set:
    """Every variable name occurring free or bound anywhere in ``phi``."""
    names = set()
    for sub in subformulas(phi):
        if isinstance(sub, (Exists, Forall, Card)):
            names.add(sub.var)
        for t in atom_terms(sub):
            if t.var is not None:
                names.add(t.var)
    return names


def node_count(phi: Formula) -> int:
    """Size of ``phi`` measured in AST nodes (terms count their word length)."""
    n = 0
    for sub in subformulas(phi):
        n += 1
        for t in atom_terms(sub):
            n += 1 + len(t.word)
    return n


def fresh_name(prefix: str, taken) -> str:
    i = 0
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


# --------------------------------------------------------------------------
# printing

_PREC = {Or: 1, And: 2}


def _needs_parens(child: Formula, parent_prec: int) -> bool:
    if isinstance(child, (Exists, Forall, Card)):
        return True
    if isinstance(child, (And, Or)):
        return _PREC[type(child)] <= parent_prec
    return False


def to_text(phi: Formula) -> str:
    """Print ``phi`` in the canonical ASCII grammar accepted by the parser."""
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, FalseF):
        return "false"
    if isinstance(phi, Eq):
        return f"{phi.left} = {phi.right}"
    if isinstance(phi, Pred):
        return f"{phi.name}({phi.term})"
    if isinstance(phi, Rel):
        return f"{phi.name}({', '.join(phi.args)})"
    if isinstance(phi, Card):
        return f"#>= {phi.k} {phi.var}. {to_text(phi.body)}"
    if isinstance(phi, Not):
        b = phi.body
        if isinstance(b, Eq):
            return f"{b.left} != {b.right}"
        if isinstance(b, (Pred, Rel, TrueF, FalseF)):
            return "!" + to_text(b)
        return f"!({to_text(b)})"
    if isinstance(phi, (And, Or)):
        prec = _PREC[type(phi)]
        sep = " & " if isinstance(phi, And) else " | "
        if not phi.parts:
            return "true" if isinstance(phi, And) else "false"
        items = []
        for p in phi.parts:
            s = to_text(p)
            items.append(f"({s})" if _needs_parens(p, prec) else s)
        return sep.join(items)
    if isinstance(phi, Exists):
        return f"E {phi.var}. {to_text(phi.body)}"
    if isinstance(phi, Forall):
        return f"A {phi.var}. {to_text(phi.body)}"
    raise TypeError(f"not a formula: {phi!r}")
