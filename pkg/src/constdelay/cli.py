"""Command-line front end.

Results go to stdout, diagnostics to stderr.  Exit status is 0 on success,
1 when ``check --strict-exit`` finds the sentence false, 2 on any input
error or refused computation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import FORMAT_VERSION, __version__
from .bij_structure import BijStructure, StepMeter, StructureError, _content_lines, load_structure
from .degree_reduction import (
    RelStructure,
    build_bijective,
    dump_reduced,
    enum_fo_deg,
    load_rel_structure,
)
from .enumeration import enum_query, measure_delay
from .formula import FormulaError, ResourceLimitError, free_vars, to_text
from .oracle import OracleBudgetExceeded, brute_force
from .parser import parse_formula_file
from .qelim import eliminate_all
from .subgraph import Graph, enumerate_embeddings, load_graph


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# inputs


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def detect_kind(text: str) -> str:
    """``"graph"``, ``"relational"`` or ``"bijective"`` from the directives used."""
    for _, words in _content_lines(text):
        if words[0] == "format":
            continue
        if words[0] == "graph":
            return "graph"
        break
    for _, words in _content_lines(text):
        if words[0] == "rel":
            return "relational"
    return "bijective"


def load_any(path: str, as_structure: bool = False):
    """Load a structure file; graphs are accepted only with ``as_structure``."""
    text = _read(path)
    kind = detect_kind(text)
    if kind == "graph":
        if not as_structure:
            raise UsageError(f"{path}: graph file; pass --as-structure to query it through the relation E")
        return load_graph(text, path).to_rel_structure()
    if kind == "relational":
        return load_rel_structure(text, path)
    return load_structure(text, source=path)


def read_formula(arg: str, S=None):
    """Inline formula text, or ``@path`` for a formula file."""
    text = _read(arg[1:]) if arg.startswith("@") else arg
    if S is None:
        return parse_formula_file(text)[0]
    declared = S.signature.symbols()
    phi, sig = parse_formula_file(text, S.signature)
    unknown = sorted(sig.symbols() - declared)
    if unknown:
        raise UsageError(f"symbols not in the structure: {', '.join(unknown)}")
    return phi


def _fmt(S, tup) -> str:
    return "(" + ", ".join(S.element_name(a) for a in tup) + ")"


def _enumerator(phi, S, meter, args):
    if isinstance(S, RelStructure):
        return enum_fo_deg(phi, S, meter, args.union)
    return enum_query(phi, S, meter, args.union, elimination=args.elimination)


# --------------------------------------------------------------------------
# commands


def cmd_check(args, out) -> int:
    S = load_any(args.structure, args.as_structure)
    phi = read_formula(args.formula, S)
    if free_vars(phi):
        raise UsageError(f"check needs a sentence; free variables: {', '.join(free_vars(phi))}")
    if args.oracle:
        truth = bool(brute_force(phi, S, ()).truth)
    else:
        e = _enumerator(phi, S, StepMeter(), args)
        e.precompute()
        truth = e.next() is not None
    out.write("true\n" if truth else "false\n")
    return 1 if args.strict_exit and not truth else 0


def cmd_enum(args, out) -> int:
    S = load_any(args.structure, args.as_structure)
    phi = read_formula(args.formula, S)
    if args.oracle:
        rows = brute_force(phi, S).assignments
    else:
        rows = _enumerator(phi, S, StepMeter(), args)
    for tup in rows:
        out.write(_fmt(S, tup) + "\n")
    return 0


def cmd_qe(args, out) -> int:
    arg = args.formula
    if not arg.startswith("@") and Path(arg).is_file():
        arg = "@" + arg
    phi = read_formula(arg)
    out.write(to_text(eliminate_all(phi)) + "\n")
    return 0


def cmd_reduce(args, out) -> int:
    text = _read(args.structure)
    kind = detect_kind(text)
    if kind == "bijective":
        raise UsageError(f"{args.structure}: already a bijective structure")
    S = load_graph(text, args.structure).to_rel_structure() if kind == "graph" else load_rel_structure(text, args.structure)
    out.write(dump_reduced(build_bijective(S)))
    return 0


def cmd_subgraph(args, out) -> int:
    G = load_graph(_read(args.host), args.host)
    H = load_graph(_read(args.pattern), args.pattern)
    e = enumerate_embeddings(
        H, G, args.induced, args.degree_constrained, args.canonical, StepMeter(), args.union
    )
    if args.count_only:
        out.write(f"{sum(1 for _ in e)}\n")
        return 0
    for tup in e:
        out.write("(" + ", ".join(map(str, tup)) + ")\n")
    return 0


def tile(S, n: int):
    """Disjoint copies of ``S`` padded with isolated elements up to exactly ``n``.

    Padding elements are fixed points of every function and belong to no
    predicate; constants stay in the first copy.  The degree never grows.
    """
    m = S.size
    if m == 0 or n < m:
        raise UsageError(f"size {n} is smaller than the structure ({m} elements)")
    copies = n // m
    if isinstance(S, RelStructure):
        rels = {
            name: (arity, [tuple(c * m + a for a in t) for c in range(copies) for t in ts])
            for name, (arity, ts) in S.relations.items()
        }
        return RelStructure(n, rels)
    funcs = {}
    for f, arr in S.functions.items():
        img = [c * m + int(b) for c in range(copies) for b in arr]
        funcs[f] = img + list(range(copies * m, n))
    preds = {p: [c * m + a for c in range(copies) for a in S.predicate_members(p)] for p in S.predicates}
    return BijStructure.from_lists(n, funcs, preds, dict(S.constants))


def cmd_bench_delay(args, out) -> int:
    S = load_any(args.structure, args.as_structure)
    phi = read_formula(args.formula, S)
    sizes = args.sizes or [S.size]
    cols = ("n", "tuples", "precompute_steps", "max_gap", "mean_gap", "final_gap")
    out.write("\t".join(cols) + "\n")
    for n in sizes:
        T = S if n == S.size else tile(S, n)
        r = measure_delay(_enumerator(phi, T, StepMeter(), args), keep_gaps=False)
        row = (n, r.tuples, r.precompute_steps, r.max_gap, f"{r.mean_gap:.2f}", r.final_gap)
        out.write("\t".join(map(str, row)) + "\n")
    return 0


def _sizes(text: str) -> list:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="constdelay",
        description="Quantifier elimination and constant-delay enumeration of first-order queries.",
    )
    p.add_argument(
        "--version", action="version", version=f"constdelay {__version__} (structure/graph format {FORMAT_VERSION})"
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def query_opts(q, oracle=True):
        q.add_argument("structure", help="bijective, relational or graph structure file")
        q.add_argument("formula", help="formula text, or @path to read it from a file")
        q.add_argument("--as-structure", action="store_true", help="query a graph file through the relation E")
        q.add_argument("--union", choices=("auto", "disjoint", "merge"), default="auto")
        q.add_argument(
            "--elimination",
            choices=("syntactic", "structure"),
            default="syntactic",
            help="elimination mode for bijective structures (relational ones always use 'structure')",
        )
        if oracle:
            q.add_argument("--oracle", action="store_true", help="answer by exhaustive search instead")

    q = sub.add_parser("check", help="truth of a sentence")
    query_opts(q)
    q.add_argument("--strict-exit", action="store_true", help="exit 1 when the sentence is false")
    q.set_defaults(run=cmd_check)

    q = sub.add_parser("enum", help="list the satisfying tuples")
    query_opts(q)
    q.set_defaults(run=cmd_enum)

    q = sub.add_parser("qe", help="print a quantifier-free equivalent")
    q.add_argument("formula", help="formula file (or @path, or inline text)")
    q.set_defaults(run=cmd_qe)

    q = sub.add_parser("reduce", help="bijective structure and element table for a relational structure")
    q.add_argument("structure")
    q.set_defaults(run=cmd_reduce)

    q = sub.add_parser("subgraph", help="embeddings of a pattern graph into a host graph")
    q.add_argument("host", help="host graph file G")
    q.add_argument("pattern", help="pattern graph file H")
    q.add_argument("--induced", action="store_true")
    q.add_argument("--degree-constrained", action="store_true")
    q.add_argument("--canonical", action="store_true", help="one embedding per automorphism orbit")
    q.add_argument("--count-only", action="store_true")
    q.add_argument("--union", choices=("auto", "disjoint", "merge"), default="auto")
    q.set_defaults(run=cmd_subgraph)

    q = sub.add_parser("bench-delay", help="delay table over tiled copies of a structure")
    query_opts(q, oracle=False)
    q.add_argument("--sizes", type=_sizes, help="comma-separated domain sizes, e.g. 1024,4096")
    q.set_defaults(run=cmd_bench_delay)
    return p


def run(argv: Optional[list] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args, out)
    except (UsageError, FormulaError, StructureError, ResourceLimitError, OracleBudgetExceeded) as exc:
        err.write(f"constdelay {args.command}: error: {exc}\n")
        return 2
    except RecursionError:
        err.write(f"constdelay {args.command}: error: formula nested too deeply\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
