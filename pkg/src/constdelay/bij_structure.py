"""Bijective structures: permutations, monadic predicates and constants.

Elements are dense indices ``0..n-1``.  Every function is stored as a
forward and an inverse image array, both as numpy arrays (for whole-domain
scans) and as Python lists (for single lookups during enumeration).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .formula import (
    CONST,
    ELEM,
    FALSE,
    TRUE,
    And,
    Card,
    Eq,
    FalseF,
    Formula,
    FormulaError,
    Not,
    Or,
    Pred,
    Rel,
    Signature,
    Term,
    TrueF,
    free_vars,
    to_text,
)


class StructureError(ValueError):
    """Malformed or invalid structure input."""

    def __init__(self, message: str, line: Optional[int] = None, source: str = "<structure>"):
        self.line = line
        super().__init__(f"{source}:{line}: {message}" if line else message)


class UnboundVariableError(FormulaError):
    pass


class StepMeter:
    """Monotone counter of abstract computation steps."""

    def __init__(self):
        self.steps = 0

    def tick(self, n: int = 1) -> None:
        self.steps += n


class NullMeter(StepMeter):
    def tick(self, n: int = 1) -> None:
        pass


NULL_METER = NullMeter()


@dataclass(eq=False)
class BijStructure:
    size: int
    functions: dict = field(default_factory=dict)  # name -> np.ndarray
    predicates: dict = field(default_factory=dict)  # name -> np.ndarray[bool]
    constants: dict = field(default_factory=dict)  # name -> int
    names: Optional[list] = None

    def __post_init__(self):
        n = self.size
        if n < 0:
            raise StructureError("domain size must be non-negative")
        self.inverses: dict = {}
        self._fwd_list: dict = {}
        self._inv_list: dict = {}
        for name, arr in list(self.functions.items()):
            arr = np.asarray(arr, dtype=np.int64)
            if arr.shape != (n,):
                raise StructureError(f"function {name!r} must have {n} images")
            if n and (arr.min() < 0 or arr.max() >= n):
                raise StructureError(f"function {name!r} is not a permutation: image out of range")
            inv = np.full(n, -1, dtype=np.int64)
            inv[arr] = np.arange(n, dtype=np.int64)
            if n and inv.min() < 0:
                raise StructureError(f"function {name!r} is not a permutation: duplicate image")
            self.functions[name] = arr
            self.inverses[name] = inv
            self._fwd_list[name] = arr.tolist()
            self._inv_list[name] = inv.tolist()
        for name, mem in list(self.predicates.items()):
            mem = np.asarray(mem, dtype=bool)
            if mem.shape != (n,):
                raise StructureError(f"predicate {name!r} must have {n} entries")
            self.predicates[name] = mem
        for name, c in self.constants.items():
            if not 0 <= c < n:
                raise StructureError(f"constant {name!r} = {c} outside the domain")
        self._images: dict = {}
        self._card_memo: dict = {}
        self._lock = threading.Lock()

    # -- construction helpers
    @classmethod
    def from_lists(cls, size, functions=None, predicates=None, constants=None, names=None):
        preds = {}
        for name, members in (predicates or {}).items():
            mem = np.zeros(size, dtype=bool)
            mem[list(members)] = True
            preds[name] = mem
        return cls(size, dict(functions or {}), preds, dict(constants or {}), names)

    @property
    def signature(self) -> Signature:
        return Signature(
            functions=set(self.functions),
            predicates=set(self.predicates),
            constants=set(self.constants),
        )

    def element_name(self, a: int) -> str:
        if self.names is not None:
            return self.names[a]
        return str(a)

    def predicate_members(self, name: str) -> list:
        return np.flatnonzero(self.predicates[name]).tolist()

    # -- scalar evaluation
    def apply_word(self, word, a: int, meter: StepMeter = NULL_METER) -> int:
        for f, s in reversed(word):
            a = (self._fwd_list if s > 0 else self._inv_list)[f][a]
        meter.tick(len(word))
        return a

    def base_value(self, t: Term, asg) -> int:
        if t.kind == ELEM:
            if not 0 <= t.base < self.size:
                raise StructureError(f"element @{t.base} outside the domain")
            return t.base
        if t.kind == CONST:
            return self.constants[t.base]
        try:
            return asg[t.base]
        except KeyError:
            raise UnboundVariableError(f"variable {t.base!r} is unbound") from None

    # -- whole-domain evaluation
    def image(self, word) -> np.ndarray:
        """``word`` applied to every element, memoized per word."""
        word = tuple(word)
        arr = self._images.get(word)
        if arr is None:
            if not word:
                arr = np.arange(self.size, dtype=np.int64)
            else:
                (f, s), rest = word[0], word[1:]
                inner = self.image(rest)
                arr = (self.functions if s > 0 else self.inverses)[f][inner]
            self._images[word] = arr
        return arr

    # -- cardinality statements
    def card_count(self, v: str, body: Formula, meter: StepMeter = NULL_METER) -> int:
        key = (v, to_text(body))
        hit = self._card_memo.get(key)
        if hit is not None:
            return hit
        mask = eval_vector(self, body, v, meter)
        count = int(mask.sum()) if self.size else 0
        meter.tick(self.size)
        with self._lock:
            return self._card_memo.setdefault(key, count)


# --------------------------------------------------------------------------
# loading


def _resolve_elem(tok: str, names_index: dict, n: int, lineno: int, source: str) -> int:
    if tok in names_index:
        return names_index[tok]
    try:
        a = int(tok)
    except ValueError:
        raise StructureError(f"unknown element {tok!r}", lineno, source) from None
    if not 0 <= a < n:
        raise StructureError(f"element {a} outside domain of size {n}", lineno, source)
    return a


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_structure(text: str, sig: Optional[Signature] = None, source: str = "<structure>") -> BijStructure:
    """Parse the line-oriented bijective structure format.

    ``domain <n>``, ``names <e0> ... <e(n-1)>``, ``const <c> <elem>``,
    ``pred <U> <elem>*``, ``perm <f> <img_0> ... <img_(n-1)>``; an optional
    leading ``format 1``.  When ``sig`` is given every symbol must be
    declared in it.
    """
    n = None
    names = None
    names_index: dict = {}
    funcs, preds, consts = {}, {}, {}
    first = True
    for lineno, words in _content_lines(text):
        key, args = words[0], words[1:]
        if first and key == "format":
            if args != ["1"]:
                raise StructureError(f"unsupported format {' '.join(args)!r}", lineno, source)
            first = False
            continue
        first = False
        if key == "domain":
            if n is not None or len(args) != 1:
                raise StructureError("expected a single 'domain <n>' line", lineno, source)
            n = int(args[0])
            continue
        if n is None:
            raise StructureError("'domain <n>' must come first", lineno, source)
        if key == "names":
            if len(args) != n or len(set(args)) != n:
                raise StructureError(f"'names' needs {n} distinct names", lineno, source)
            names = list(args)
            names_index = {a: i for i, a in enumerate(names)}
            continue
        if not args:
            raise StructureError(f"'{key}' needs a symbol name", lineno, source)
        name, rest = args[0], args[1:]
        if sig is not None and name not in sig.symbols():
            raise StructureError(f"undeclared symbol {name!r}", lineno, source)
        if name in funcs or name in preds or name in consts:
            raise StructureError(f"symbol {name!r} defined twice", lineno, source)
        if key == "perm":
            if len(rest) != n:
                raise StructureError(f"perm {name!r} needs {n} images, got {len(rest)}", lineno, source)
            imgs = [_resolve_elem(t, names_index, n, lineno, source) for t in rest]
            if len(set(imgs)) != n:
                raise StructureError(f"function {name!r} is not a permutation", lineno, source)
            funcs[name] = imgs
        elif key == "pred":
            preds[name] = [_resolve_elem(t, names_index, n, lineno, source) for t in rest]
        elif key == "const":
            if len(rest) != 1:
                raise StructureError(f"const {name!r} needs exactly one element", lineno, source)
            try:
                consts[name] = _resolve_elem(rest[0], names_index, n, lineno, source)
            except StructureError as exc:
                raise StructureError(f"constant {name!r} out of range: {exc}", lineno, source) from None
        else:
            raise StructureError(f"unknown directive {key!r}", lineno, source)
    if n is None:
        raise StructureError("missing 'domain <n>' line", None, source)
    return BijStructure.from_lists(n, funcs, preds, consts, names)


def dump_structure(S: BijStructure) -> str:
    lines = ["format 1", f"domain {S.size}"]
    if S.names is not None:
        lines.append("names " + " ".join(S.names))
    for c, a in S.constants.items():
        lines.append(f"const {c} {a}")
    for p in S.predicates:
        lines.append(" ".join(["pred", p] + [str(a) for a in S.predicate_members(p)]))
    for f, arr in S.functions.items():
        lines.append(" ".join(["perm", f] + [str(a) for a in arr.tolist()]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# quantifier-free evaluation


def eval_term(S: BijStructure, asg, t: Term, meter: StepMeter = NULL_METER) -> int:
    """Value of ``t`` under ``asg``: image arrays applied right to left."""
    return S.apply_word(t.word, S.base_value(t, asg), meter)


def eval_qf(S: BijStructure, asg, phi: Formula, meter: StepMeter = NULL_METER) -> bool:
    """Truth of a quantifier-free formula (cardinality atoms allowed)."""
    if isinstance(phi, Eq):
        meter.tick()
        return eval_term(S, asg, phi.left, meter) == eval_term(S, asg, phi.right, meter)
    if isinstance(phi, Pred):
        meter.tick()
        return bool(S.predicates[phi.name][eval_term(S, asg, phi.term, meter)])
    if isinstance(phi, Not):
        return not eval_qf(S, asg, phi.body, meter)
    if isinstance(phi, And):
        return all(eval_qf(S, asg, p, meter) for p in phi.parts)
    if isinstance(phi, Or):
        return any(eval_qf(S, asg, p, meter) for p in phi.parts)
    if isinstance(phi, Card):
        meter.tick()
        return S.card_count(phi.var, phi.body, meter) >= phi.k
    if isinstance(phi, TrueF):
        return True
    if isinstance(phi, FalseF):
        return False
    if isinstance(phi, Rel):
        raise FormulaError("relational atom in a bijective formula")
    raise FormulaError(f"not quantifier-free: {to_text(phi)}")


def count_satisfying(S: BijStructure, v: str, body: Formula, meter: StepMeter = NULL_METER) -> int:
    """Number of elements ``a`` with ``(S, a) |= body(v)``, memoized."""
    extra = [w for w in free_vars(body) if w != v]
    if extra:
        raise FormulaError(f"counting body mentions variables other than {v!r}: {extra}")
    return S.card_count(v, body, meter)


def _vector_term(S: BijStructure, t: Term, v: str):
    if t.kind == "var":
        if t.base != v:
            raise UnboundVariableError(f"variable {t.base!r} is unbound in a one-variable scan")
        return S.image(t.word)
    return S.apply_word(t.word, S.base_value(t, {}))


def eval_vector(S: BijStructure, phi: Formula, v: str, meter: StepMeter = NULL_METER) -> np.ndarray:
    """Boolean mask over the domain: which ``a`` satisfy ``phi(v := a)``.

    ``phi`` is quantifier-free with free variables among ``{v}``.  Charges
    ``n`` steps per literal test and per term hop, as a scalar scan would.
    """
    n = S.size
    if isinstance(phi, Eq):
        meter.tick(n * (1 + len(phi.left.word) + len(phi.right.word)))
        left, right = _vector_term(S, phi.left, v), _vector_term(S, phi.right, v)
        return np.broadcast_to(np.asarray(left) == np.asarray(right), (n,))
    if isinstance(phi, Pred):
        meter.tick(n * (1 + len(phi.term.word)))
        idx = _vector_term(S, phi.term, v)
        return np.broadcast_to(S.predicates[phi.name][idx], (n,))
    if isinstance(phi, Not):
        return ~eval_vector(S, phi.body, v, meter)
    if isinstance(phi, And):
        out = np.ones(n, dtype=bool)
        for p in phi.parts:
            out &= eval_vector(S, p, v, meter)
        return out
    if isinstance(phi, Or):
        out = np.zeros(n, dtype=bool)
        for p in phi.parts:
            out |= eval_vector(S, p, v, meter)
        return out
    if isinstance(phi, Card):
        meter.tick(n)
        return np.full(n, S.card_count(phi.var, phi.body, meter) >= phi.k)
    if isinstance(phi, TrueF):
        return np.ones(n, dtype=bool)
    if isinstance(phi, FalseF):
        return np.zeros(n, dtype=bool)
    raise FormulaError(f"cannot scan {to_text(phi)}")


def scan(S: BijStructure, literals: Sequence[Formula], v: str, meter: StepMeter = NULL_METER) -> list:
    """Ascending list of elements satisfying every literal, one domain pass."""
    meter.tick(S.size)
    mask = np.ones(S.size, dtype=bool)
    for lit in literals:
        mask &= eval_vector(S, lit, v, meter)
    return np.flatnonzero(mask).tolist()


__all__ = [
    "BijStructure",
    "StepMeter",
    "StructureError",
    "UnboundVariableError",
    "count_satisfying",
    "dump_structure",
    "eval_qf",
    "eval_term",
    "eval_vector",
    "load_structure",
    "scan",
]
