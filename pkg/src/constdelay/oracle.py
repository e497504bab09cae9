"""Exhaustive reference evaluator and random instance generator.

Deliberately naive: quantifiers iterate the whole domain, cardinality
atoms count by iteration, relational atoms are looked up directly.  Nothing
here calls into the elimination, enumeration or reduction code.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .formula import (
    CONST,
    ELEM,
    And,
    Card,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    Not,
    Or,
    Pred,
    Rel,
    Term,
    TrueF,
    free_vars,
)

DEFAULT_BUDGET = 10**7


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    variables: tuple
    assignments: list  # sorted list of tuples
    truth: Optional[bool] = None

    def as_set(self) -> set:
        return set(self.assignments)


class _Evaluator:
    def __init__(self, S, budget: int):
        self.S = S
        self.budget = budget
        self.nodes = 0
        self.relational = hasattr(S, "relations")
        if self.relational:
            self.tuples = {name: set(ts) for name, (_, ts) in S.relations.items()}
            self.n = S.size
        else:
            self.n = S.size
            self.fwd = {f: [int(a) for a in arr] for f, arr in S.functions.items()}
            self.inv = {}
            for f, img in self.fwd.items():
                back = [0] * self.n
                for a, b in enumerate(img):
                    back[b] = a
                self.inv[f] = back

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise OracleBudgetExceeded(f"oracle exceeded {self.budget} evaluation nodes")

    def term(self, t: Term, env: dict) -> int:
        if t.kind == ELEM:
            a = t.base
        elif t.kind == CONST:
            a = self.S.constants[t.base]
        else:
            a = env[t.base]
        for f, s in reversed(t.word):
            a = (self.fwd if s > 0 else self.inv)[f][a]
        return a

    def holds(self, phi: Formula, env: dict) -> bool:
        self.tick()
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, FalseF):
            return False
        if isinstance(phi, Eq):
            return self.term(phi.left, env) == self.term(phi.right, env)
        if isinstance(phi, Pred):
            a = self.term(phi.term, env)
            if self.relational:
                return (a,) in self.tuples[phi.name]
            return bool(self.S.predicates[phi.name][a])
        if isinstance(phi, Rel):
            return tuple(env[v] for v in phi.args) in self.tuples[phi.name]
        if isinstance(phi, Not):
            return not self.holds(phi.body, env)
        if isinstance(phi, And):
            return all(self.holds(p, env) for p in phi.parts)
        if isinstance(phi, Or):
            return any(self.holds(p, env) for p in phi.parts)
        if isinstance(phi, Exists):
            return any(self.holds(phi.body, {**env, phi.var: a}) for a in range(self.n))
        if isinstance(phi, Forall):
            return all(self.holds(phi.body, {**env, phi.var: a}) for a in range(self.n))
        if isinstance(phi, Card):
            count = 0
            for a in range(self.n):
                if self.holds(phi.body, {**env, phi.var: a}):
                    count += 1
            return count >= phi.k
        raise TypeError(f"not a formula: {phi!r}")


def brute_force(
    phi: Formula,
    S,
    variables: Optional[tuple] = None,
    budget: int = DEFAULT_BUDGET,
) -> OracleResult:
    """All assignments to ``variables`` (default: free variables) satisfying ``phi``."""
    if variables is None:
        variables = free_vars(phi)
    ev = _Evaluator(S, budget)
    sat = []
    for tup in product(range(ev.n), repeat=len(variables)):
        if ev.holds(phi, dict(zip(variables, tup))):
            sat.append(tup)
    truth = bool(sat) if not variables else None
    return OracleResult(tuple(variables), sorted(sat), truth)


def holds(phi: Formula, S, env: Optional[dict] = None, budget: int = DEFAULT_BUDGET) -> bool:
    return _Evaluator(S, budget).holds(phi, env or {})


# --------------------------------------------------------------------------
# random instances


@dataclass
class Profile:
    n_min: int = 1
    n_max: int = 6
    variables: int = 3
    depth: int = 2
    functions: int = 2
    predicates: int = 2
    constants: int = 0
    max_word: int = 2
    size: int = 4  # rough bound on connective nesting
    free: Optional[int] = None  # number of free variables, random if None
    cardinality: bool = True
    relational: bool = False
    max_tuples: int = 6
    extra: dict = field(default_factory=dict)


def random_bij_structure(rng: random.Random, n: int, functions, predicates, constants=()):
    from .bij_structure import BijStructure

    funcs = {}
    for f in functions:
        perm = list(range(n))
        rng.shuffle(perm)
        funcs[f] = perm
    preds = {p: [a for a in range(n) if rng.random() < 0.5] for p in predicates}
    consts = {c: rng.randrange(n) for c in constants} if n else {}
    return BijStructure.from_lists(n, funcs, preds, consts)


def random_rel_structure(rng: random.Random, n: int, relations: dict, max_tuples: int):
    """At most ``max_tuples`` tuples in total, spread over the relations at random."""
    from .degree_reduction import RelStructure

    total = rng.randint(0, max_tuples) if n else 0
    names = sorted(relations)
    rels = {name: (relations[name], []) for name in relations}
    for _ in range(total):
        name = rng.choice(names)
        rels[name][1].append(tuple(rng.randrange(n) for _ in range(relations[name])))
    return RelStructure(n, rels)


class _FormulaGen:
    def __init__(self, rng: random.Random, profile: Profile, funcs, preds, consts, rels):
        self.rng = rng
        self.p = profile
        self.funcs, self.preds, self.consts, self.rels = funcs, preds, consts, rels
        self.counter = 0

    def term(self, v: str) -> Term:
        word = tuple(
            (self.rng.choice(self.funcs), self.rng.choice((1, -1)))
            for _ in range(self.rng.randint(0, self.p.max_word) if self.funcs else 0)
        )
        return Term(v).apply(word)

    def atom(self, scope: list) -> Formula:
        rng = self.rng
        if self.rels:
            kind = rng.choice(["rel", "rel", "eq"])
            if kind == "eq" or not scope:
                if not scope:
                    return rng.choice([TrueF(), FalseF()])
                return Eq(Term(rng.choice(scope)), Term(rng.choice(scope)))
            name = rng.choice(sorted(self.rels))
            return Rel(name, tuple(rng.choice(scope) for _ in range(self.rels[name])))
        choices = ["eq", "eq"]
        if self.preds:
            choices += ["pred", "pred"]
        if self.consts:
            choices.append("const")
        if self.p.cardinality:
            choices.append("card")
        kind = rng.choice(choices)
        if not scope and kind != "card":
            kind = "card" if self.p.cardinality else kind
            if not scope and kind != "card":
                return rng.choice([TrueF(), FalseF()])
        if kind == "eq":
            a, b = rng.choice(scope), rng.choice(scope)
            if len(scope) > 1 and rng.random() < 0.7:
                a, b = rng.sample(scope, 2)
            return Eq(self.term(a), self.term(b))
        if kind == "pred":
            return Pred(rng.choice(self.preds), self.term(rng.choice(scope)))
        if kind == "const":
            return Eq(self.term(rng.choice(scope)), Term(rng.choice(self.consts), (), CONST))
        w = f"c{self.counter}"
        self.counter += 1
        body = self.qf([w], 1)
        return Card(rng.randint(1, 3), w, body)

    def qf(self, scope: list, size: int) -> Formula:
        rng = self.rng
        if size <= 1 or rng.random() < 0.3:
            a = self.atom(scope)
            p_neg = 0.5 if isinstance(a, Eq) else 0.3
            return Not(a) if rng.random() < p_neg else a
        op = rng.choice([And, And, Or])
        return op((self.qf(scope, size - 1), self.qf(scope, size - 1)))

    def formula(self, scope: list, bound_pool: list, depth: int, size: int) -> Formula:
        rng = self.rng
        if depth > 0 and bound_pool and rng.random() < 0.7:
            v = bound_pool[0]
            q = rng.choice([Exists, Exists, Forall])
            body = self.formula(scope + [v], bound_pool[1:], depth - 1, size)
            if rng.random() < 0.4:
                side = self.qf(scope, 2) if scope else self.atom(scope)
                return rng.choice([And, Or])((side, q(v, body)))
            return q(v, body)
        return self.qf(scope, size)


def random_formula(rng: random.Random, profile: Profile, funcs=(), preds=(), consts=(), rels=None) -> Formula:
    names = [f"x{i}" for i in range(profile.variables)]
    n_free = profile.free if profile.free is not None else rng.randint(0, profile.variables)
    n_free = min(n_free, profile.variables)
    free, bound = names[:n_free], names[n_free:]
    gen = _FormulaGen(rng, profile, list(funcs), list(preds), list(consts), rels or {})
    depth = min(profile.depth, len(bound))
    return gen.formula(free, bound, depth, profile.size)


def random_instance(seed, profile: Optional[Profile] = None):
    """Reproducible ``(formula, structure)`` pair for ``profile``.

    The formula comes from the parser's renaming pass so it looks exactly
    like user input.
    """
    from .parser import rename_bound

    profile = profile or Profile()
    # Tuples hash differently per process; their repr does not.
    rng = random.Random(seed if isinstance(seed, (int, str)) else repr(seed))
    n = rng.randint(profile.n_min, profile.n_max)
    if profile.relational:
        rels = profile.extra.get("relations", {"E": 2, "U": 1})
        S = random_rel_structure(rng, n, rels, profile.max_tuples)
        phi = random_formula(rng, profile, rels=rels)
    else:
        funcs = ["f", "g", "h"][: profile.functions]
        preds = ["U", "V", "W"][: profile.predicates]
        consts = ["c", "d"][: profile.constants]
        S = random_bij_structure(rng, n, funcs, preds, consts)
        phi = random_formula(rng, profile, funcs, preds, consts)
    return rename_bound(phi), S


def random_sigma1(seed, profile: Optional[Profile] = None):
    """Reproducible existential sentence ``exists y_1..y_k. matrix`` with its structure.

    The matrix is quantifier-free and free of cardinality atoms; ``k`` is
    between 1 and ``profile.variables``.
    """
    from .parser import rename_bound

    profile = profile or Profile()
    rng = random.Random(seed if isinstance(seed, (int, str)) else repr(seed))
    n = rng.randint(profile.n_min, profile.n_max)
    funcs = ["f", "g", "h"][: profile.functions]
    preds = ["U", "V", "W"][: profile.predicates]
    consts = ["c", "d"][: profile.constants]
    S = random_bij_structure(rng, n, funcs, preds, consts)
    flat = Profile(**{**profile.__dict__, "cardinality": False})
    gen = _FormulaGen(rng, flat, funcs, preds, consts, {})
    prefix = [f"y{i}" for i in range(rng.randint(1, max(1, profile.variables)))]
    body = gen.qf(prefix, profile.size)
    for v in reversed(prefix):
        body = Exists(v, body)
    return rename_bound(body), S
