"""Enumerating embeddings of a small pattern graph into a bounded-degree host.

An embedding is an injective map from pattern vertices ``h_1..h_k`` to host
vertices that sends edges to edges (and, for induced embeddings, non-edges
to non-edges).  It is reported as the tuple of images in pattern order.
The pattern becomes a first-order formula over ``E`` and goes through the
relational pipeline in :mod:`constdelay.degree_reduction`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

from .bij_structure import StepMeter, StructureError, _content_lines
from .degree_reduction import RelStructure, enum_fo_deg
from .enumeration import Empty, Enumerator
from .formula import TRUE, Eq, Formula, FormulaError, Not, Rel, Term, conj

EDGE = "E"


def degree_relation(alpha: int) -> str:
    return f"V{alpha}"


@dataclass
class Graph:
    """Vertices ``0..n-1``.  Undirected graphs keep both orientations of every edge."""

    n: int
    edges: list = field(default_factory=list)
    directed: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise StructureError("vertex count must be non-negative")
        seen, out = set(), []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise StructureError(f"edge ({u}, {v}) has an endpoint outside 0..{self.n - 1}")
            pairs = [(u, v)] if self.directed or u == v else [(u, v), (v, u)]
            for p in pairs:
                if p not in seen:
                    seen.add(p)
                    out.append(p)
        self.edges = out
        self._edge_set = seen

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edge_set

    def neighbours(self) -> list:
        """Distinct neighbours of every vertex, ignoring direction and loops."""
        nb = [set() for _ in range(self.n)]
        for u, v in self.edges:
            if u != v:
                nb[u].add(v)
                nb[v].add(u)
        return nb

    def degrees(self) -> list:
        return [len(s) for s in self.neighbours()]

    def to_rel_structure(self, unary: Optional[dict] = None) -> RelStructure:
        rels = {EDGE: (2, list(self.edges))}
        for name, members in (unary or {}).items():
            rels[name] = (1, [(a,) for a in members])
        return RelStructure(self.n, rels)


def load_graph(text: str, source: str = "<graph>") -> Graph:
    """``graph <n> <directed|undirected>`` followed by one ``u v`` per line."""
    header = None
    edges = []
    first = True
    for lineno, words in _content_lines(text):
        if first and words[0] == "format":
            if words[1:] != ["1"]:
                raise StructureError(f"unsupported format {' '.join(words[1:])!r}", lineno, source)
            first = False
            continue
        first = False
        if header is None:
            if words[0] != "graph" or len(words) != 3 or words[2] not in ("directed", "undirected"):
                raise StructureError("expected 'graph <n> <directed|undirected>'", lineno, source)
            try:
                header = (int(words[1]), words[2] == "directed")
            except ValueError:
                raise StructureError(f"bad vertex count {words[1]!r}", lineno, source) from None
            continue
        if len(words) != 2:
            raise StructureError("expected an edge 'u v'", lineno, source)
        try:
            u, v = int(words[0]), int(words[1])
        except ValueError:
            raise StructureError(f"bad edge {' '.join(words)!r}", lineno, source) from None
        if not (0 <= u < header[0] and 0 <= v < header[0]):
            raise StructureError(f"edge ({u}, {v}) has an endpoint outside 0..{header[0] - 1}", lineno, source)
        edges.append((u, v))
    if header is None:
        raise StructureError("missing 'graph <n> <directed|undirected>' header", None, source)
    return Graph(header[0], edges, header[1])


def dump_graph(G: Graph) -> str:
    lines = [f"graph {G.n} {'directed' if G.directed else 'undirected'}"]
    if G.directed:
        lines += [f"{u} {v}" for u, v in G.edges]
    else:
        lines += [f"{u} {v}" for u, v in G.edges if u <= v]
    return "\n".join(lines) + "\n"


@dataclass
class DegreePartition:
    """``classes[alpha]`` lists the vertices with exactly ``alpha`` distinct neighbours."""

    classes: list

    @property
    def d(self) -> int:
        return len(self.classes) - 1


def degree_partition(G: Graph) -> DegreePartition:
    deg = G.degrees()
    d = max(deg, default=0)
    classes = [[] for _ in range(d + 1)]
    for v, a in enumerate(deg):
        classes[a].append(v)
    return DegreePartition(classes)


def pattern_variables(k: int) -> tuple:
    return tuple(f"x{i + 1}" for i in range(k))


def build_embedding_formula(H: Graph, induced: bool = False, degree_constrained: bool = False) -> Formula:
    """First-order formula over ``E`` (and ``V<alpha>``) whose solutions are the embeddings of ``H``.

    Undirected patterns use one ``E`` atom per edge in plain mode (the host
    relation is symmetric) and both orientations in induced mode, where
    every non-adjacent ordered pair of distinct vertices also gets a
    negated atom.  Host loops are therefore only constrained by pattern
    loops.  The
    degree-constrained mode additionally pins each ``x_i`` to the host
    vertices whose degree equals that of ``h_i``.
    """
    k = H.n
    if k < 1:
        raise FormulaError("the pattern needs at least one vertex")
    xs = pattern_variables(k)
    parts = [Not(Eq(Term(xs[i]), Term(xs[j]))) for i in range(k) for j in range(i + 1, k)]
    for i in range(k):
        for j in range(k):
            if H.has_edge(i, j):
                if induced or H.directed or i <= j:
                    parts.append(Rel(EDGE, (xs[i], xs[j])))
            elif induced and i != j:
                parts.append(Not(Rel(EDGE, (xs[i], xs[j]))))
    if degree_constrained:
        for i, a in enumerate(H.degrees()):
            parts.append(Rel(degree_relation(a), (xs[i],)))
    return conj(parts) if parts else TRUE


class CanonicalFilter(Enumerator):
    """Keep one embedding per orbit of the pattern's automorphism group: the lexicographically least."""

    def __init__(self, inner: Enumerator, autos: list):
        super().__init__(inner.meter)
        self.inner = inner
        self.autos = [a for a in autos if list(a) != sorted(a)]

    def _precompute(self):
        self.inner.precompute()

    def _next(self):
        while True:
            t = self.inner.next()
            if t is None:
                return None
            self.meter.tick(len(self.autos))
            if all(t <= tuple(t[s] for s in sigma) for sigma in self.autos):
                return t

    def is_empty(self):
        return self.inner.is_empty()


def enumerate_embeddings(
    H: Graph,
    G: Graph,
    induced: bool = False,
    degree_constrained: bool = False,
    canonical: bool = False,
    meter: Optional[StepMeter] = None,
    union: str = "auto",
) -> Enumerator:
    """Enumerator of the ordered embeddings of ``H`` into ``G``.

    With ``canonical`` only the least tuple of every automorphism orbit is
    kept, so the count becomes the number of copies of ``H`` in ``G``.
    """
    meter = meter or StepMeter()
    if H.directed != G.directed:
        raise FormulaError("pattern and host must both be directed or both undirected")
    phi = build_embedding_formula(H, induced, degree_constrained)
    unary = None
    if degree_constrained:
        part = degree_partition(G)
        if max(H.degrees(), default=0) > part.d:
            e = Empty(meter)
            e.precompute()
            return e
        unary = {degree_relation(a): members for a, members in enumerate(part.classes)}
        for a in H.degrees():
            unary.setdefault(degree_relation(a), [])
    S = G.to_rel_structure(unary)
    e = enum_fo_deg(phi, S, meter, union, variables=pattern_variables(H.n))
    if canonical:
        return CanonicalFilter(e, automorphisms(H))
    return e


# --------------------------------------------------------------------------
# brute force, used by tests and the CLI's --oracle path


def is_embedding(H: Graph, G: Graph, image, induced: bool = False) -> bool:
    if len(set(image)) != len(image):
        return False
    for i in range(H.n):
        for j in range(H.n):
            e_h = H.has_edge(i, j)
            e_g = G.has_edge(image[i], image[j])
            if e_h and not e_g:
                return False
            if induced and e_g and not e_h and i != j:
                return False
    return True


def brute_force_embeddings(H: Graph, G: Graph, induced: bool = False) -> list:
    """Every injective (induced) homomorphism by exhaustive search, in lexicographic order."""
    return [p for p in permutations(range(G.n), H.n) if is_embedding(H, G, p, induced)]


def automorphisms(H: Graph) -> list:
    return [p for p in permutations(range(H.n)) if is_embedding(H, H, p, induced=True)]


def complete_graph(n: int) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def cycle_graph(n: int, directed: bool = False) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)], directed)


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])
