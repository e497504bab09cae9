import io
import subprocess
import sys

import pytest

from constdelay import cli


@pytest.fixture
def files(tmp_path):
    paths = {
        "path.rel": "format 1\ndomain 4\nrel E 2\n0 1\n1 2\n2 3\nend\n",
        "k4.graph": "graph 4 undirected\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n",
        "k3.graph": "graph 3 undirected\n0 1\n1 2\n2 0\n",
        "p3.graph": "graph 3 undirected\n0 1\n1 2\n",
        "s.bij": "domain 4\nnames a b c d\npred U a c\nperm f b c d a\n",
        "q.fo": "# predecessor of a U element\nE y. f(x) = y & U(y)\n",
        "bad.bij": "domain 3\nperm f 0 0 1\n",
    }
    for name, text in paths.items():
        (tmp_path / name).write_text(text)
    return lambda name: str(tmp_path / name)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_check_true_sentence(files):
    assert run("check", files("path.rel"), "E x. E y. E(x,y)") == (0, "true\n", "")


def test_check_false_sentence_and_strict_exit(files):
    assert run("check", files("path.rel"), "A x. E y. E(x,y)")[:2] == (0, "false\n")
    assert run("check", "--strict-exit", files("path.rel"), "A x. E y. E(x,y)")[0] == 1


def test_check_oracle_agrees(files):
    for text in ("E x. E y. E(x,y) & E(y,x)", "A x. E y. E(x,y) | E(y,x)"):
        assert run("check", files("path.rel"), text)[1] == run("check", "--oracle", files("path.rel"), text)[1]


def test_check_needs_a_sentence(files):
    code, out, err = run("check", files("s.bij"), "U(x)")
    assert code == 2 and out == "" and "free variables" in err


def test_enum_prints_named_tuples(files):
    code, out, _ = run("enum", files("s.bij"), "@" + files("q.fo"))
    assert code == 0
    assert out == "(b)\n(d)\n"


def test_enum_relational_and_oracle(files):
    code, out, _ = run("enum", files("path.rel"), "E(x,y)")
    assert code == 0 and sorted(out.splitlines()) == ["(0, 1)", "(1, 2)", "(2, 3)"]
    assert sorted(run("enum", "--oracle", files("path.rel"), "E(x,y)")[1].splitlines()) == sorted(out.splitlines())


def test_enum_on_graph_with_empty_result(files):
    assert run("enum", files("k4.graph"), "--as-structure", "E(x,y) & x = y") == (0, "", "")


def test_graph_needs_as_structure(files):
    code, _, err = run("enum", files("k4.graph"), "E(x,y)")
    assert code == 2 and "--as-structure" in err


def test_qe_prints_eliminated_formula(files):
    assert run("qe", files("q.fo")) == (0, "U(f(x))\n", "")
    assert run("qe", "E y. y != x")[1] == "#>= 2 v0. true\n"


def test_reduce_prints_structure_and_table(files):
    code, out, _ = run("reduce", files("path.rel"))
    assert code == 0
    assert "domain 15" in out and "E(2,3)" in out


def test_subgraph_commands(files):
    assert run("subgraph", files("k4.graph"), files("k3.graph"), "--count-only")[1] == "24\n"
    assert run("subgraph", files("k4.graph"), files("k3.graph"), "--canonical", "--count-only")[1] == "4\n"
    assert run("subgraph", files("k3.graph"), files("p3.graph"), "--induced")[1] == ""
    lines = run("subgraph", files("k4.graph"), files("k3.graph"), "--canonical")[1].splitlines()
    assert lines == ["(0, 1, 2)", "(0, 1, 3)", "(0, 2, 3)", "(1, 2, 3)"]


def test_bench_delay_table(files):
    code, out, _ = run("bench-delay", files("s.bij"), "U(x)", "--sizes", "1024,4096")
    rows = [line.split("\t") for line in out.splitlines()]
    assert code == 0
    assert rows[0] == ["n", "tuples", "precompute_steps", "max_gap", "mean_gap", "final_gap"]
    assert [r[0] for r in rows[1:]] == ["1024", "4096"]
    assert [r[1] for r in rows[1:]] == ["512", "2048"]


def test_bench_delay_rejects_shrinking(files):
    assert run("bench-delay", files("s.bij"), "U(x)", "--sizes", "2")[0] == 2


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (("check", "bad.bij", "E x. U(x)"), "bad.bij:2"),
        (("enum", "s.bij", "W(x)"), "not in the structure"),
        (("enum", "s.bij", "U(x"), "1:"),
        (("enum", "missing.bij", "U(x)"), "missing.bij"),
    ],
)
def test_input_errors_exit_2(files, argv, fragment):
    argv = [files(a) if a.endswith((".bij", ".rel")) else a for a in argv]
    code, out, err = run(*argv)
    assert code == 2 and out == ""
    assert fragment in err


def test_unknown_subcommand(capsys):
    assert cli.run(["frobnicate"]) == 2


def test_output_is_deterministic(files):
    argv = ("enum", files("path.rel"), "E y. E(x,y) | E(y,x)")
    assert run(*argv) == run(*argv)


def test_console_entry_point_version():
    proc = subprocess.run([sys.executable, "-m", "constdelay.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "format 1" in proc.stdout
