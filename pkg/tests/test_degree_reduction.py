import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constdelay.bij_structure import StepMeter, StructureError, load_structure
from constdelay.degree_reduction import (
    CYCLE_FUNCTION,
    DOMAIN_PREDICATE,
    RelStructure,
    build_bijective,
    degree,
    dump_reduced,
    dump_rel_structure,
    enum_fo_deg,
    load_rel_structure,
    position_function,
    translate_atom,
    translate_formula,
    tuple_predicate,
)
from constdelay.formula import And, Exists, FormulaError, Pred, Rel, Signature, Term, to_text
from constdelay.oracle import Profile, brute_force, random_instance, random_rel_structure
from constdelay.parser import parse_formula


def R(text):
    return parse_formula(text, Signature(relations={"E": 2, "U": 1}))


def path():
    return RelStructure(4, {"E": (2, [(0, 1), (1, 2), (2, 3)])})


def drain(e):
    e.precompute()
    out = []
    while (t := e.next()) is not None:
        out.append(t)
    return out


# -- degree ----------------------------------------------------------------------


def test_path_degree():
    assert degree(path()) == (2, 2)


def test_empty_structure_degree():
    assert degree(RelStructure(0, {})) == (0, 0)
    assert degree(RelStructure(3, {"E": (2, [])})) == (0, 0)


def test_reflexive_tuple_counts_twice():
    assert degree(RelStructure(1, {"E": (2, [(0, 0)])})) == (2, 0)


def test_duplicate_tuples_are_merged():
    S = RelStructure(2, {"E": (2, [(0, 1), (0, 1)])})
    assert S.tuple_count == 1


@pytest.mark.parametrize("rels", [{"E": (2, [(0, 5)])}, {"E": (2, [(0,)])}, {"E": (0, [])}])
def test_bad_tuples_rejected(rels):
    with pytest.raises((StructureError, ValueError)):
        RelStructure(3, rels)


# -- construction ------------------------------------------------------------------


def test_path_reduction_size():
    red = build_bijective(path())
    assert red.d == 2
    assert red.structure.size == 3 * 4 + 3 == 15


def test_no_tuples_means_identity_cycle():
    red = build_bijective(RelStructure(5, {"E": (2, [])}))
    assert red.structure.size == 5
    assert red.structure.functions[CYCLE_FUNCTION].tolist() == list(range(5))


def test_degree_bound_may_exceed_but_not_undercut():
    red = build_bijective(path(), d=4)
    assert red.structure.size == 5 * 4 + 3
    with pytest.raises(ValueError):
        build_bijective(path(), d=1)


def _check_invariants(S, red):
    B = red.structure
    n, d = S.size, red.d
    assert B.size == (d + 1) * n + S.tuple_count
    g = B.functions[CYCLE_FUNCTION]
    for x in range(n):
        orbit = [x]
        while len(orbit) <= d + 1:
            orbit.append(int(g[orbit[-1]]))
        assert orbit[d + 1] == x
        assert sorted(orbit[: d + 1]) == sorted([x] + [red.copy_index(x, h) for h in range(1, d + 1)])
    for z in range((d + 1) * n, B.size):
        assert g[z] == z
    for j in range(1, red.m + 1):
        f = B.functions[position_function(j)]
        assert np.array_equal(f[f], np.arange(B.size))
    masks = [B.predicates[DOMAIN_PREDICATE]] + [B.predicates[tuple_predicate(r)] for r in S.relations]
    assert (sum(m.astype(int) for m in masks) <= 1).all()
    assert B.predicates[DOMAIN_PREDICATE][:n].all() and not B.predicates[DOMAIN_PREDICATE][n:].any()
    for name, (_, tuples) in S.relations.items():
        T = B.predicates[tuple_predicate(name)]
        assert T.sum() == len(tuples)
        for i, t in enumerate(tuples):
            z = red.tuple_index(name, i)
            assert T[z]
            for j, x in enumerate(t, 1):
                c = int(B.functions[position_function(j)][z])
                assert n <= c < (d + 1) * n and (c - n) // d == x


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_reduced_structure_invariants(seed):
    rng = random.Random(seed)
    S = random_rel_structure(rng, rng.randint(0, 7), {"E": 2, "U": 1, "T": 3}, 9)
    red = build_bijective(S)
    _check_invariants(S, red)
    # The reduced structure passes the loader's own permutation checks.
    reloaded = load_structure(dump_reduced(red).split("# index")[0])
    assert reloaded.size == red.structure.size


def test_describe_names_every_kind_of_element():
    red = build_bijective(path())
    assert red.describe(0) == "0"
    assert red.describe(red.copy_index(1, 2)) == "(1,2)"
    assert red.describe(red.tuple_index("E", 2)) == "E(2,3)"
    with pytest.raises(ValueError):
        red.original(red.tuple_index("E", 0))


# -- formulas ----------------------------------------------------------------------


def test_edge_atom_translation():
    theta = translate_atom(Rel("E", ("x", "y")), 2)
    assert to_text(theta) == (
        "E t. T_E(t) & (f1(t) = g(x) | f1(t) = g(g(x))) & (f2(t) = g(y) | f2(t) = g(g(y)))"
    )


def test_translation_agrees_on_the_path():
    S = path()
    red = build_bijective(S)
    theta = translate_atom(Rel("E", ("x", "y")), red.d)
    sat = brute_force(theta, red.structure, ("x", "y")).as_set()
    for a in range(4):
        for b in range(4):
            assert ((a, b) in sat) == ((a, b) in S.relations["E"][1])


def test_nullary_atom_rejected():
    with pytest.raises(FormulaError):
        translate_atom(Rel("E", ()), 2)


def test_quantifiers_are_relativized():
    phi = translate_formula(R("E v. E(v, v)"), Signature(relations={"E": 2}), 2)
    assert isinstance(phi, Exists)
    assert isinstance(phi.body, And) and phi.body.parts[0] == Pred(DOMAIN_PREDICATE, Term(phi.var))


def test_free_variables_are_guarded():
    phi = translate_formula(R("E(x, y)"), Signature(relations={"E": 2}), 2)
    assert phi.parts[1:] == (Pred("D", Term("x")), Pred("D", Term("y")))


def test_projection_through_the_reduction():
    S = path()
    red = build_bijective(S)
    phi = R("E y. E(x, y)")
    psi = translate_formula(phi, S.signature, red.d)
    assert brute_force(psi, red.structure).assignments == [(0,), (1,), (2,)]
    assert brute_force(phi, S).assignments == [(0,), (1,), (2,)]


# -- enumeration -----------------------------------------------------------------


def test_enumerate_edges():
    assert sorted(drain(enum_fo_deg(R("E(x, y)"), path()))) == [(0, 1), (1, 2), (2, 3)]


def test_enumerate_sinks():
    assert drain(enum_fo_deg(R("!(E y. E(x, y))"), path())) == [(3,)]


def test_closed_formula_on_empty_relation():
    assert drain(enum_fo_deg(R("E x. E y. E(x, y)"), RelStructure(3, {"E": (2, [])}))) == []


def test_unknown_relation_rejected():
    with pytest.raises(FormulaError):
        enum_fo_deg(R("U(x)"), path())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from(["auto", "merge"]))
def test_relational_queries_match_oracle(seed, union):
    phi, S = random_instance(("rel", seed), Profile(relational=True, n_max=5, variables=2, max_tuples=6))
    got = drain(enum_fo_deg(phi, S, union=union))
    assert len(got) == len(set(got))
    assert sorted(got) == brute_force(phi, S).assignments


# -- files -----------------------------------------------------------------------


def test_relational_file_round_trip():
    text = "format 1\ndomain 4\nrel E 2\n0 1\n1 2\n2 3\nend\nrel U 1\n3\nend\n"
    S = load_rel_structure(text)
    assert S.relations["E"][1] == ((0, 1), (1, 2), (2, 3))
    assert load_rel_structure(dump_rel_structure(S)).relations == S.relations


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("domain 2\nrel E 2\n0 1\n", "end"),
        ("domain 2\nrel E 2\n0 1 1\nend\n", "arity"),
        ("domain 2\nrel E 2\n0 7\nend\n", "outside"),
        ("rel E 2\nend\n", "domain"),
    ],
)
def test_relational_file_errors(text, fragment):
    with pytest.raises(StructureError, match=fragment):
        load_rel_structure(text, "r.rel")


def test_reduced_dump_has_mapping_table():
    out = dump_reduced(build_bijective(path()))
    assert "domain 15" in out
    assert "E(0,1)" in out and "(3,2)" in out
