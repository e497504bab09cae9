import pytest
from hypothesis import given, settings, strategies as st

from constdelay.formula import Card, Exists, Forall, free_vars, subformulas
from constdelay.oracle import (
    OracleBudgetExceeded,
    Profile,
    brute_force,
    holds,
    random_instance,
    random_sigma1,
)

from .helpers import P, bij


def test_fixed_point_free_cycle():
    assert brute_force(P("E x. f(x) = x"), bij(3, {"f": [1, 2, 0]})).truth is False


def test_distinct_pairs():
    assert len(brute_force(P("x != y"), bij(3)).assignments) == 6


def test_counting_atom():
    assert holds(P("#>= 2 x. U(x)"), bij(3, predicates={"U": [0, 1]}))


def test_budget_is_enforced():
    with pytest.raises(OracleBudgetExceeded):
        brute_force(P("E a. E b. a = b & a != b"), bij(30), budget=100)


def test_same_seed_same_instance():
    a = random_instance(17)
    b = random_instance(17)
    assert a[0] == b[0]
    assert a[1].size == b[1].size
    assert all((a[1].functions[f] == b[1].functions[f]).all() for f in a[1].functions)


def test_tuple_seeds_are_stable():
    assert random_instance(("x", 3))[0] == random_instance(("x", 3))[0]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_generated_functions_are_permutations(seed):
    _, S = random_instance(seed)
    for arr in S.functions.values():
        assert sorted(arr.tolist()) == list(range(S.size))


def test_small_profile_within_budget():
    profile = Profile(n_min=5, n_max=5, variables=2, depth=2)
    for seed in range(30):
        phi, S = random_instance(seed, profile)
        brute_force(phi, S)


def test_relational_profile_respects_tuple_total():
    profile = Profile(relational=True, max_tuples=4)
    for seed in range(50):
        _, S = random_instance(seed, profile)
        assert S.tuple_count <= 4


def test_sigma1_sentences_are_existential():
    for seed in range(50):
        phi, _ = random_sigma1(seed)
        assert not free_vars(phi)
        assert isinstance(phi, Exists)
        inner = phi
        while isinstance(inner, Exists):
            inner = inner.body
        assert not any(isinstance(f, (Exists, Forall, Card)) for f in subformulas(inner))
