import json
import subprocess
import sys

import pytest

from mool.cli import main
from conftest import CORPUS
from fragments import SPAWN_READ


def corpus(eid):
    return str(CORPUS / f"{eid}.mool")


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_exit_codes(capsys):
    assert main(["check", corpus("T-01")]) == 0
    assert main(["check", corpus("T-02")]) == 1
    assert "T-Spawn" in capsys.readouterr().out
    assert main(["check", "does-not-exist.mool"]) == 2


def test_parse_error_exit_code(tmp_path, capsys):
    assert main(["check", write(tmp_path, "bad.mool", "class {")]) == 2
    err = capsys.readouterr().err
    assert "syntax-error" in err and ":1:" in err


def test_json_lines(capsys):
    main(["check", "--json", corpus("T-05")])
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines
    for line in lines:
        obj = json.loads(line)
        assert obj["rule"] and obj["code"] and "start" in obj["span"]


def test_run_exit_codes(tmp_path, capsys):
    assert main(["run", corpus("R-01"), "--seed", "7"]) == 0
    assert main(["run", corpus("R-04"), "--seed", "1"]) == 0
    loop = write(tmp_path, "loop.mool", "class Main { void main() { while (true) { unit } } }")
    assert main(["run", loop, "--max-steps", "100"]) == 3
    bad = write(tmp_path, "bad.mool", SPAWN_READ.replace("spawn f.read(); f.close()", "f.read(); f.close(); f.close()"))
    assert main(["run", bad]) == 1
    out = capsys.readouterr()
    assert "protocol-violation" in out.out and "warning" in out.err
    nomain = write(tmp_path, "nomain.mool", "class A { }")
    assert main(["run", nomain]) == 2


def test_graph(tmp_path, capsys):
    dot = tmp_path / "g.dot"
    assert main(["graph", corpus("R-01"), "--dot", str(dot)]) == 0
    assert "stuck=0" in capsys.readouterr().out
    assert dot.read_text().startswith("digraph")
    bad = write(tmp_path, "bad.mool", SPAWN_READ)
    main(["graph", bad])
    out = capsys.readouterr().out
    assert "stuck=0" not in out and "protocol-violation" in out
    loop = write(tmp_path, "loop.mool", "class Main { void main() { int n = 0; while (true) { n = n + 1 } } }")
    assert main(["graph", loop, "--max-states", "30"]) == 3


def test_fmt(tmp_path, capsys):
    assert main(["fmt", corpus("T-13")]) == 0
    text = capsys.readouterr().out
    path = write(tmp_path, "t.mool", text)
    assert main(["fmt", "--check", path]) == 0
    assert main(["fmt", "--check", corpus("T-13")]) == 1


def test_corpus_default_passes(capsys):
    assert main(["corpus"]) == 0
    assert "19/19 entries passed" in capsys.readouterr().out


def test_corpus_flipped_expectation(tmp_path, capsys):
    from conftest import corpus_entries
    lines = []
    for e in corpus_entries():
        expected = "accept" if e.id == "T-11" else e.expected
        lines.append(f"{e.id}\t{e.mode}\t{e.path}\t{expected}")
    path = tmp_path / "m.tsv"
    path.write_text("\n".join(lines) + "\n")
    assert main(["corpus", str(path)]) == 1
    assert "failed: T-11" in capsys.readouterr().out


def test_corpus_empty_manifest(tmp_path, capsys):
    path = tmp_path / "empty.tsv"
    path.write_text("# nothing here\n")
    assert main(["corpus", str(path)]) == 0
    assert "warning" in capsys.readouterr().out


def test_graph_mode_manifest(tmp_path):
    from mool.corpus import run_corpus
    (tmp_path / "bad.mool").write_text(SPAWN_READ)
    (tmp_path / "m.tsv").write_text(
        f"G-1\tgraph\t{corpus('R-01')}\tstuck=0,terminals=1\n"
        "G-2\tgraph\tbad.mool\tstuck>=1,reason=protocol-violation\n")
    report = run_corpus(tmp_path / "m.tsv")
    assert report.passed, [(r.entry.id, r.verdict) for r in report.results]


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "mool.cli", "check", corpus("T-01")], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip().endswith("ok")
