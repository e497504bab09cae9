import random

from constdelay.bij_structure import BijStructure
from constdelay.formula import Signature
from constdelay.parser import parse_formula


def signature():
    return Signature(functions={"f", "g"}, predicates={"U", "V"}, constants={"c"})


def P(text, sig=None):
    """Parse against a fresh unary-functional signature (f, g, U, V, c)."""
    return parse_formula(text, sig or signature())


def bij(n, functions=None, predicates=None, constants=None):
    return BijStructure.from_lists(n, functions or {}, predicates or {}, constants or {})


def random_bij(rng, n, constants=True):
    funcs = {}
    for name in ("f", "g"):
        perm = list(range(n))
        rng.shuffle(perm)
        funcs[name] = perm
    preds = {p: [a for a in range(n) if rng.random() < 0.5] for p in ("U", "V")}
    consts = {"c": rng.randrange(n)} if constants and n else {}
    return bij(n, funcs, preds, consts)


def literals(text):
    """Conjuncts of a parsed conjunction, as a list."""
    phi = P(text)
    return list(phi.parts) if type(phi).__name__ == "And" else [phi]


# One (criterion, passed, detail) entry per acceptance check; printed by the
# terminal-summary hook in conftest.py.
ACCEPTANCE_LOG = []


def record(criterion, passed, detail=""):
    ACCEPTANCE_LOG.append((criterion, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
    return passed
