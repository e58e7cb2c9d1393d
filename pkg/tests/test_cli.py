from __future__ import annotations

import json
import subprocess
import sys

import pytest

from outfn import cli
from outfn.cli import export_dot, main, run
from outfn.graphs import two_vertex_example
from outfn.lattice import ImpossibleState


def stable(rep) -> dict:
    out = rep.to_json()
    out.pop("wall_time")
    return out


# exit codes ----------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["torelli", "verify-appendix", "--n", "3"],
    ["torelli", "verify-conjugation", "--n", "3", "--hmax", "1"],
    ["roses", "enumerate", "--rank", "2", "--bound", "1"],
    ["dlk", "--rank", "3", "--bound", "1", "--check", "connected"],
    ["dlk", "--rank", "3", "--bound", "1", "--check", "nonempty"],
    ["rank2-tree", "--bound", "2"],
    ["toy", "certify", "--rank", "3", "--window", "0"],
    ["export", "--example"],
])
def test_passing_fixtures_exit_zero(argv):
    rep = run(argv)
    assert rep.exit_code == 0, rep.to_json()
    assert rep.checks and not rep.failures


def test_roses_enumerate_lists_five(capsys):
    assert main(["roses", "enumerate", "--rank", "2", "--bound", "1"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("[")]
    assert len(lines) == 5


def test_cdlk_fixture(tmp_path):
    m = tmp_path / "rose.json"
    m.write_text(json.dumps([[1, 0, -1], [0, 1, 0], [0, 0, 1]]))
    rep = run(["cdlk", "--matrix", str(m)])
    assert rep.exit_code == 0
    assert rep.data["cells"] == {"0": 2, "1": 3}
    assert [h["rank"] for h in rep.data["homology"]] == [1, 2]


def test_failing_fixture_exits_one_with_witness(monkeypatch, capsys):
    # a broken witness search must be reported as a verification failure
    monkeypatch.setattr(cli, "descending_witness", lambda rho: None)
    code = main(["dlk", "--rank", "2", "--bound", "1", "--check", "nonempty"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out and "witness=" in out


def test_internal_inconsistency_is_a_failure(monkeypatch):
    def boom(rho):
        raise ImpossibleState("forced")

    monkeypatch.setattr(cli, "descending_witness", boom)
    rep = run(["dlk", "--rank", "2", "--bound", "1"])
    assert rep.exit_code == 1
    assert rep.failures[0].witness == "forced"


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["roses", "enumerate", "--rank", "2"],
    ["roses", "enumerate", "--rank", "2", "--bound", "1", "--bogus"],
    ["torelli", "verify-appendix", "--n", "2"],
    ["toy", "certify", "--rank", "5"],
])
def test_usage_and_input_errors_exit_two(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_malformed_json_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["export", "--graph", str(bad)]).exit_code == 2
    singular = tmp_path / "singular.json"
    singular.write_text(json.dumps([[2, 0], [0, 1]]))
    assert run(["cdlk", "--matrix", str(singular)]).exit_code == 2
    assert run(["export", "--graph", str(tmp_path / "missing.json")]).exit_code == 2


def test_identity_dlk_connected_is_not_a_failure(tmp_path):
    m = tmp_path / "id.json"
    m.write_text(json.dumps([[1, 0], [0, 1]]))
    rep = run(["dlk", "--matrix", str(m), "--check", "connected"])
    assert rep.exit_code == 0 and rep.data["table"][0]["connected"] is None


def test_report_file(tmp_path):
    out = tmp_path / "report.json"
    rep = run(["--report", str(out), "torelli", "verify-appendix", "--n", "3"])
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["exit_code"] == 0 == rep.exit_code
    assert data["failures"] == 0
    assert {c["name"] for c in data["checks"]}
    assert data["wall_time"] >= 0


def test_json_flag_prints_report(capsys):
    assert main(["--json", "rank2-tree", "--bound", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["command"] == "rank2-tree" and data["exit_code"] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "outfn", "roses", "enumerate", "--rank", "2", "--bound", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "outfn", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2


# determinism -----------------------------------------------------------------

def test_reports_deterministic_across_runs():
    argv = ["dlk", "--rank", "3", "--bound", "1", "--check", "connected"]
    assert stable(run(argv)) == stable(run(argv))


def test_reports_deterministic_across_worker_counts(monkeypatch):
    argv = ["roses", "enumerate", "--rank", "3", "--bound", "1"]
    monkeypatch.setenv("TORELLI_THREADS", "1")
    one = stable(run(argv))
    monkeypatch.setenv("TORELLI_THREADS", "2")
    two = stable(run(argv))
    assert one == two and one["data"]["count"] == 145


# DOT export --------------------------------------------------------------------

def test_export_idempotent(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps(two_vertex_example().to_json()))
    a, b = tmp_path / "a.dot", tmp_path / "b.dot"
    assert run(["export", "--graph", str(g), "--out", str(a)]).exit_code == 0
    assert run(["export", "--graph", str(g), "--out", str(b)]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert export_dot(json.loads(g.read_text())) == a.read_text(encoding="utf-8")


def test_export_example_labels():
    dot = export_dot(two_vertex_example().to_json())
    for lab in ("(1,0,0)", "(0,1,0)", "(0,0,1)"):
        assert f'label="{lab}' in dot
    assert dot.count("->") == 4
    assert dot.startswith("digraph")


def test_export_rose_has_self_loops():
    dot = export_dot([[1, 1, 0], [1, 0, 0], [0, 0, 1]])
    assert dot.count("v0 -> v0") == 3


def test_export_invariant_under_relabelling():
    G = two_vertex_example().to_json()
    flipped = dict(G)
    flipped["edges"] = list(reversed(G["edges"]))
    assert export_dot(flipped) == export_dot(G)
