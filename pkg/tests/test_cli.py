import io
import json
import subprocess
import sys
from importlib import resources

import pytest

from ledgerlab.cli import main


def call(*argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_guide_with_answers():
    code, text = call("guide", "data", "--answers", "confidential=no")
    assert code == 0
    assert "Single ledger" in text


def test_guide_interactive(monkeypatch):
    code, text = call("guide", "data", stdin="y\nmaybe\ny\nn\n", monkeypatch=monkeypatch)
    assert code == 0
    assert "please answer y or n" in text
    assert "Recommendation: Off-chain data with public hash" in text
    assert "Is deletion necessary? -> yes" in text


def test_guide_interactive_eof_is_usage_error(monkeypatch):
    code, _ = call("guide", "data", stdin="y\n", monkeypatch=monkeypatch)
    assert code == 2


def test_guide_incomplete_answers():
    assert call("guide", "data", "--answers", "confidential=yes")[0] == 2


def test_paths_lists_every_route():
    code, text = call("paths", "data")
    assert code == 0
    assert len(text.strip().splitlines()) == 9
    assert len(call("paths", "interaction")[1].strip().splitlines()) == 3


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["guide"],
    ["guide", "nope"],
    ["guide", "data", "--answers", "confidential"],
    ["run", "no-such-file.scenario", "--out", "unused"],
    ["run", "demo.scenario", "--topology", "mesh"],
    ["run", "demo.scenario", "--bogus"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv, io.StringIO()) == 2


def run_files(tmp_path, *extra, name="demo.scenario"):
    code, text = call("run", name, "--out", str(tmp_path), *extra)
    return code, text, {p.name: p.read_bytes() for p in sorted(tmp_path.iterdir())}


def test_run_is_byte_identical(tmp_path):
    a = run_files(tmp_path / "a", "--seed", "7")
    b = run_files(tmp_path / "b", "--seed", "7")
    assert a[0] == 0
    assert a[2] == b[2]
    assert set(a[2]) == {"demo-channelized-seed7.report.json", "demo-channelized-seed7.ledger.ndjson",
                         "demo-channelized-seed7.audit.ndjson"}
    assert a[1].replace(str(tmp_path / "a"), "") == b[1].replace(str(tmp_path / "b"), "")


def test_double_spend_scenario_exits_with_violation(tmp_path):
    code, text, files = run_files(tmp_path, name="quorum_double_spend.scenario")
    assert code == 1
    report = json.loads(files["quorum_double_spend-public-anchor-seed0.report.json"])
    assert [v["policy"] for v in report["violations"]] == ["DoubleSpend vulnerability"]
    assert "violations: 1" in text


def test_topology_override(tmp_path):
    code, _, files = run_files(tmp_path, "--topology", "channelized", name="quorum_double_spend.scenario")
    assert code == 0
    assert "quorum_double_spend-channelized-seed0.report.json" in files


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LEDGERLAB_SEED", "11")
    code, _, files = run_files(tmp_path)
    assert code == 0 and "demo-channelized-seed11.report.json" in files
    monkeypatch.setenv("LEDGERLAB_SEED", "eleven")
    assert call("run", "demo", "--out", str(tmp_path))[0] == 2


def test_explicit_scenario_path(tmp_path):
    src = tmp_path / "mine.scenario"
    data = json.loads((resources.files("ledgerlab") / "scenarios" / "demo.scenario").read_text())
    data["name"] = "mine"
    src.write_text(json.dumps(data))
    code, _, files = run_files(tmp_path / "out", name=str(src))
    assert code == 0 and "mine-channelized-seed0.report.json" in files


def test_malformed_scenario(tmp_path):
    bad = tmp_path / "bad.scenario"
    bad.write_text("{not json")
    assert call("run", str(bad), "--out", str(tmp_path))[0] == 2
    bad.write_text(json.dumps({"format": 2, "name": "x", "parties": [], "steps": []}))
    assert call("run", str(bad), "--out", str(tmp_path))[0] == 2


def test_demo_letter_of_credit(tmp_path):
    code, text = call("demo", "letter-of-credit", "--out", str(tmp_path))
    assert code == 0
    assert "letter_of_credit" in text
    report = json.loads((tmp_path / "letter_of_credit-channelized-seed0.report.json").read_text())
    assert report["violations"] == []


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ledgerlab", "guide", "logic", "--answers",
                           "hide-from-admin=yes"], capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and "TEE" in proc.stdout
