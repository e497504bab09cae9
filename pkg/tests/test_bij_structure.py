import numpy as np
import pytest
from hypothesis import given, strategies as st

from constdelay.bij_structure import (
    BijStructure,
    StepMeter,
    StructureError,
    count_satisfying,
    dump_structure,
    eval_qf,
    eval_term,
    eval_vector,
    load_structure,
    scan,
)
from constdelay.formula import TRUE, Term
from constdelay.oracle import holds

from .helpers import P, bij, random_bij, signature


def test_three_cycle_inverse():
    S = load_structure("domain 3\nperm f 1 2 0\n")
    assert S.inverses["f"].tolist() == [2, 0, 1]


def test_duplicate_image_is_not_a_permutation():
    with pytest.raises(StructureError, match="not a permutation"):
        load_structure("domain 3\nperm f 0 0 2\n")


def test_empty_domain_is_valid():
    S = load_structure("domain 0\n")
    assert S.size == 0


def test_format_line_is_optional():
    a = load_structure("format 1\ndomain 2\npred U 1\n")
    b = load_structure("domain 2\npred U 1\n")
    assert dump_structure(a) == dump_structure(b)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("domain 3\nconst c 5\n", "out of range"),
        ("perm f 0\n", "domain"),
        ("domain 2\nperm f 0\n", "needs 2 images"),
        ("domain 2\nfrob x\n", "unknown directive"),
        ("domain 2\npred U 0\npred U 1\n", "twice"),
    ],
)
def test_malformed_files_report_a_line(text, fragment):
    with pytest.raises(StructureError, match=fragment) as info:
        load_structure(text, source="s.bij")
    assert "s.bij:" in str(info.value)


def test_undeclared_symbol_against_signature():
    with pytest.raises(StructureError, match="undeclared"):
        load_structure("domain 2\npred W 0\n", signature())


def test_names_resolve_elements():
    S = load_structure("domain 3\nnames a b c\nperm f b c a\npred U c\n")
    assert S.functions["f"].tolist() == [1, 2, 0]
    assert S.element_name(2) == "c"
    assert S.predicate_members("U") == [2]


def test_dump_round_trip(rng):
    S = random_bij(rng, 7)
    T = load_structure(dump_structure(S))
    assert dump_structure(T) == dump_structure(S)


def test_term_evaluation():
    S = bij(3, {"f": [1, 2, 0]})
    f, finv = Term("x", (("f", 1),)), Term("x", (("f", -1),))
    assert eval_term(S, {"x": 0}, f) == 1
    assert eval_term(S, {"x": 1}, finv) == 0
    assert eval_term(S, {"x": 2}, Term("x", (("f", -1), ("f", 1)))) == 2


def test_quantifier_free_evaluation():
    S = bij(3, {"f": [1, 2, 0]}, {"U": [0, 1]})
    assert eval_qf(S, {"x": 0, "y": 1}, P("f(x) = y"))
    assert not eval_qf(S, {"x": 0}, P("x != x"))
    assert eval_qf(S, {}, P("#>= 2 x. U(x)"))


def test_counting():
    S = bij(3, {"f": [1, 2, 0]}, {"U": [0, 1]})
    assert count_satisfying(S, "x", TRUE) == 3
    assert count_satisfying(S, "x", P("U(x)")) == 2
    assert count_satisfying(S, "x", P("f(x) = x")) == 0


def test_meter_counts_steps():
    m = StepMeter()
    S = bij(5, {"f": [1, 2, 3, 4, 0]})
    eval_term(S, {"x": 0}, Term("x", (("f", 1),) * 3), m)
    assert m.steps >= 3


@given(st.integers(0, 10_000))
def test_vector_evaluation_matches_pointwise(seed):
    import random

    rng = random.Random(seed)
    S = random_bij(rng, rng.randint(1, 6))
    phi = P(rng.choice(["U(f(x)) | V(x)", "!U(x) & g(x) != x", "f(g^-1(x)) = x", "U(c) & x = c", "#>= 2 y. V(y)"]))
    mask = eval_vector(S, phi, "x")
    expected = [holds(phi, S, {"x": a}) for a in range(S.size)]
    assert mask.tolist() == expected
    lits = list(phi.parts) if type(phi).__name__ == "And" else None
    if lits:
        assert scan(S, lits, "x") == [a for a in range(S.size) if expected[a]]


def test_inverse_invariant(rng):
    for _ in range(20):
        S = random_bij(rng, rng.randint(0, 9))
        for f, fwd in S.functions.items():
            inv = S.inverses[f]
            assert np.array_equal(inv[fwd], np.arange(S.size))
