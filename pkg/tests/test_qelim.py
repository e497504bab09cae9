import random

import pytest
from hypothesis import given, settings, strategies as st

from constdelay.bij_structure import StepMeter
from constdelay.enumeration import eliminate_on_structure
from constdelay.formula import Card, ResourceLimitError, TRUE, Term, free_vars, is_quantifier_free, to_text
from constdelay.normal_forms import make_conjunction
from constdelay.oracle import Profile, brute_force, holds, random_instance
from constdelay.qelim import (
    MAX_DISEQUALITIES,
    RelationalAtomError,
    Sigma1Formula,
    eliminate_all,
    eliminate_one,
    eliminate_one_on,
    is_cardinality_combination,
    model_check,
    sigma1_model_check,
)
from constdelay.parser import parse_formula
from constdelay.formula import Signature

from .helpers import P, bij, literals, random_bij


def same_solutions(phi, psi, S, variables):
    return brute_force(phi, S, variables).assignments == brute_force(psi, S, variables).assignments


def test_witness_substitution():
    out = eliminate_one(literals("f(y) = x & U(y)"), "y")
    assert to_text(out) == "U(f^-1(x))"


def test_single_disequality_needs_two_elements():
    out = eliminate_one(literals("y != x"), "y")
    assert isinstance(out, Card) and out.k == 2 and out.body == TRUE
    phi = P("E y. y != x")
    for n in (1, 2, 3):
        assert same_solutions(phi, out, bij(n), ("x",))


def test_two_disequalities_equivalent_on_small_structures(rng):
    phi = P("E y. U(y) & y != x & y != g(x)")
    lits = list(phi.body.parts)
    for prune in (True, False):
        out = eliminate_one(lits, phi.var, prune=prune)
        assert is_quantifier_free(out)
        for _ in range(60):
            S = random_bij(rng, rng.randint(1, 5))
            assert same_solutions(phi, out, S, ("x",))


def test_trace_records_the_case():
    trace = []
    eliminate_all(P("E y. (f(y) = x & U(y)) | (U(y) & y != x)"), trace=trace)
    cases = {step.case for step in trace}
    assert cases == {"positive-equality", "all-negative"}
    (neg,) = [s for s in trace if s.case == "all-negative"]
    assert neg.k == 1 and neg.triples


def test_too_many_disequalities_refused():
    terms = ["f(" * i + "x" + ")" * i for i in range(MAX_DISEQUALITIES + 1)]
    text = " & ".join(f"y != {t}" for t in terms)
    with pytest.raises(ResourceLimitError):
        eliminate_one(literals(text), "y")


def test_universal_becomes_negated_count():
    out = eliminate_all(P("A x. f(x) = x"))
    assert is_cardinality_combination(out)
    for f, expect in (([0, 1, 2], True), ([1, 2, 0], False), ([0, 2, 1], False)):
        assert model_check(P("A x. f(x) = x"), bij(3, {"f": f})) is expect


def test_quantifier_free_input_unchanged():
    phi = P("U(x) & f(x) != y")
    assert eliminate_all(phi) == phi


def test_closed_formula_is_cardinality_combination(rng):
    phi = P("E x. E y. f(x) = y & x != y")
    out = eliminate_all(phi)
    assert is_cardinality_combination(out)
    for _ in range(50):
        S = random_bij(rng, rng.randint(1, 6))
        assert holds(out, S) == holds(phi, S)


def test_model_check_examples():
    S = bij(3, {"f": [1, 2, 0]})
    assert model_check(P("E x. f(x) = x"), S) is False
    assert model_check(P("A x. f(f(f(x))) = x"), S) is True
    assert model_check(P("E x. x = x"), bij(0)) is False


def test_model_check_needs_a_sentence():
    with pytest.raises(Exception):
        model_check(P("U(x)"), bij(2))


def test_relational_atoms_are_refused():
    phi = parse_formula("E y. E(x, y)", Signature(relations={"E": 2}))
    with pytest.raises(RelationalAtomError):
        eliminate_all(phi)


def test_sigma1_examples():
    phi = Sigma1Formula.from_formula(P("E x. E y. x != y"))
    assert sigma1_model_check(phi, bij(1)) is False
    assert sigma1_model_check(phi, bij(2)) is True
    psi = Sigma1Formula.from_formula(P("E x. U(x) & f(x) != x"))
    assert sigma1_model_check(psi, bij(2, {"f": [0, 1]}, {"U": [0]})) is False


def test_sigma1_rejects_universal_matrix():
    with pytest.raises(Exception):
        Sigma1Formula.from_formula(P("E x. A y. f(x) = y"))


def test_structure_elimination_of_one_conjunction(rng):
    lits = literals("U(y) & y != x & y != f(x)")
    phi = P("E y. U(y) & y != x & y != f(x)")
    for _ in range(40):
        S = random_bij(rng, rng.randint(1, 5))
        out = eliminate_one_on(lits, "y", S)
        assert same_solutions(phi, out, S, ("x",))


_profile = Profile(n_max=5, variables=3, depth=2, functions=2, predicates=2, constants=1)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_elimination_sound_with_constants(seed):
    phi, S = random_instance(("qe", seed), _profile)
    vars_ = free_vars(phi)
    assert same_solutions(phi, eliminate_all(phi), S, vars_)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_unpruned_elimination_sound(seed):
    phi, S = random_instance(("raw", seed), Profile(n_max=4, variables=2, depth=1, size=3))
    assert same_solutions(phi, eliminate_all(phi, prune=False), S, free_vars(phi))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_structure_elimination_sound(seed):
    phi, S = random_instance(("on", seed), _profile)
    out = eliminate_on_structure(phi, S, StepMeter())
    assert is_quantifier_free(out)
    assert same_solutions(phi, out, S, free_vars(phi))
