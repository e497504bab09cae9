import random

import pytest
from hypothesis import given, settings, strategies as st

from constdelay.bij_structure import StructureError
from constdelay.formula import FormulaError, Not, Rel, to_text
from constdelay.subgraph import (
    Graph,
    automorphisms,
    brute_force_embeddings,
    build_embedding_formula,
    complete_graph,
    cycle_graph,
    degree_partition,
    dump_graph,
    enumerate_embeddings,
    load_graph,
    path_graph,
)


def embeddings(H, G, **kw):
    return list(enumerate_embeddings(H, G, **kw))


def test_single_edge_formula():
    assert to_text(build_embedding_formula(Graph(2, [(0, 1)]))) == "x1 != x2 & E(x1, x2)"


def test_induced_triangle_formula():
    parts = build_embedding_formula(complete_graph(3), induced=True).parts
    assert sum(isinstance(p, Not) and not isinstance(p.body, Rel) for p in parts) == 3
    assert sum(isinstance(p, Rel) for p in parts) == 6
    assert not any(isinstance(p, Not) and isinstance(p.body, Rel) for p in parts)


def test_induced_path_adds_the_missing_pair():
    parts = build_embedding_formula(path_graph(3), induced=True).parts
    negated = {p.body.args for p in parts if isinstance(p, Not) and isinstance(p.body, Rel)}
    assert negated == {("x1", "x3"), ("x3", "x1")}


@pytest.mark.parametrize("induced", [False, True])
def test_triangles_in_k4(induced):
    got = embeddings(complete_graph(3), complete_graph(4), induced=induced)
    assert len(got) == len(set(got)) == 24
    assert sorted(got) == brute_force_embeddings(complete_graph(3), complete_graph(4), induced)


@pytest.mark.parametrize("induced", [False, True])
def test_paths_in_c5(induced):
    got = embeddings(path_graph(3), cycle_graph(5), induced=induced)
    assert sorted(got) == brute_force_embeddings(path_graph(3), cycle_graph(5), induced)
    assert len(got) == 10


def test_no_induced_path_in_triangle():
    assert embeddings(path_graph(3), complete_graph(3), induced=True) == []


def test_canonical_counts_copies():
    assert len(embeddings(complete_graph(3), complete_graph(4), canonical=True)) == 4
    assert len(embeddings(path_graph(3), cycle_graph(5), canonical=True)) == 5


def test_degree_constrained_mode():
    # P3's end vertices have degree 1; C5 has none, so nothing maps.
    assert embeddings(path_graph(3), cycle_graph(5), degree_constrained=True) == []
    star = Graph(4, [(0, 1), (0, 2), (0, 3)])
    got = embeddings(path_graph(2), star, degree_constrained=True)
    assert got == []
    host = Graph(5, [(0, 1), (1, 2), (3, 4)])
    got = sorted(embeddings(path_graph(2), host, degree_constrained=True))
    assert got == [(3, 4), (4, 3)]


def test_direction_mismatch_rejected():
    with pytest.raises(FormulaError):
        embeddings(cycle_graph(3, directed=True), complete_graph(4))


def test_degree_partitions():
    assert degree_partition(cycle_graph(5)).classes == [[], [], [0, 1, 2, 3, 4]]
    assert degree_partition(path_graph(4)).classes == [[], [0, 3], [1, 2]]
    assert degree_partition(Graph(3)).classes == [[0, 1, 2]]


def test_graph_file_round_trip():
    G = load_graph("format 1\ngraph 4 undirected\n0 1\n1 2\n# chord\n0 2\n")
    assert G.has_edge(1, 0) and G.has_edge(2, 0)
    assert dump_graph(load_graph(dump_graph(G))) == dump_graph(G)
    D = load_graph("graph 3 directed\n0 1\n")
    assert D.has_edge(0, 1) and not D.has_edge(1, 0)


@pytest.mark.parametrize(
    "text, fragment",
    [("0 1\n", "expected .graph"), ("graph 2 undirected\n0 5\n", "outside"), ("graph x undirected\n", "vertex count"), ("", "missing")],
)
def test_graph_file_errors(text, fragment):
    with pytest.raises(StructureError, match=fragment):
        load_graph(text, "g.graph")


PATTERNS = {
    "edge": Graph(2, [(0, 1)]),
    "P3": path_graph(3),
    "K3": complete_graph(3),
    "C4": cycle_graph(4),
    "star3": Graph(4, [(0, 1), (0, 2), (0, 3)]),
}


@pytest.mark.parametrize("name", sorted(PATTERNS))
def test_pattern_into_itself_counts_automorphisms(name):
    H = PATTERNS[name]
    got = embeddings(H, H, induced=True)
    assert sorted(got) == sorted(automorphisms(H))


def _random_graph(rng, n, p, directed=False):
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v and (directed or u < v)]
    return Graph(n, [e for e in pairs if rng.random() < p], directed)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_random_small_hosts(seed, induced):
    rng = random.Random(seed)
    G = _random_graph(rng, rng.randint(1, 5), 0.4)
    H = path_graph(rng.randint(1, 3))
    assert sorted(embeddings(H, G, induced=induced)) == brute_force_embeddings(H, G, induced)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**9))
def test_random_directed_hosts(seed):
    rng = random.Random(seed)
    G = _random_graph(rng, rng.randint(2, 5), 0.3, directed=True)
    H = Graph(2, [(0, 1)], directed=True)
    assert sorted(embeddings(H, G)) == brute_force_embeddings(H, G)
