"""Golden-file tests: every module example runs through the CLI.

Each ``tests/golden/<name>.case.json`` holds ``argv``, ``input`` (or
``input_text``), the expected exit code and a hand-checked ``expect`` subset
of the payload.  The full stdout is frozen in ``<name>.out.json``;
regenerate with ``SS_SKELETON_REGEN_GOLDEN=1 pytest tests/test_cli.py``.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from ss_skeleton import __version__
from ss_skeleton.cli import Envelope, dump_json, run

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("SS_SKELETON_REGEN_GOLDEN") == "1"
CASES = sorted(p.name[: -len(".case.json")] for p in GOLDEN.glob("*.case.json"))


def run_cli(argv, stdin_text, capsys, tmp_path):
    src = tmp_path / "input.json"
    src.write_text(stdin_text)
    code = run(list(argv) + ["--input", str(src)])
    out = capsys.readouterr()
    return code, out.out, out.err


def _subset(expect, actual, path="payload"):
    if isinstance(expect, dict):
        assert isinstance(actual, dict), path
        for k, v in expect.items():
            assert k in actual, f"{path}.{k} missing"
            _subset(v, actual[k], f"{path}.{k}")
    else:
        assert actual == expect, f"{path}: expected {expect!r}, got {actual!r}"


@pytest.mark.parametrize("name", CASES)
def test_golden(name, capsys, tmp_path):
    case = json.loads((GOLDEN / f"{name}.case.json").read_text())
    text = case["input_text"] if "input_text" in case else json.dumps(case["input"])
    code, out, err = run_cli(case["argv"], text, capsys, tmp_path)
    assert code == case["exit"], err
    golden = GOLDEN / f"{name}.out.json"
    if code == 2:
        assert out == ""
        assert err.startswith("input error:")
        if "stderr_contains" in case:
            assert case["stderr_contains"] in err
        return
    if REGEN:
        golden.write_text(out)
    assert out == golden.read_text(), f"{name}: output differs from golden file"
    doc = json.loads(out)
    if "expect" in case:
        _subset(case["expect"], doc["payload"])
    for want in case.get("expect_failures", []):
        (check,) = [c for c in doc["payload"]["checks"] if c["id"] == want["check"]]
        assert not check["passed"]
        assert any(all(f.get(k) == v for k, v in want["fields"].items()) for f in check["failures"]), check


def test_cases_cover_every_command():
    commands = {json.loads((GOLDEN / f"{n}.case.json").read_text())["argv"][0] for n in CASES}
    assert commands >= {"value-cmp", "special", "eval", "dominates", "units", "factor", "cover", "verify"}


def test_flagship_certificate_shape(capsys, tmp_path):
    case = json.loads((GOLDEN / "cover_two_annuli.case.json").read_text())
    code, out, _ = run_cli(["cover"], json.dumps(case["input"]), capsys, tmp_path)
    assert code == 0
    cert = json.loads(out)
    assert cert["tree"]["kind"] == "FiberSplit"
    assert cert["tree"]["split"]["q"] == "-1"
    assert [lf["id"] for lf in cert["leaves"]] == ["root.f0", "root.f1"]
    assert sum(len(lf["simplices"]) for lf in cert["leaves"]) == 4


def test_malformed_json_reports_position(capsys, tmp_path):
    code, out, err = run_cli(["value-cmp"], '{"v": "1/2",\n "w": }', capsys, tmp_path)
    assert code == 2
    assert "line 2, column 7" in err


def test_invariant_violation_names_invariant(capsys, tmp_path):
    payload = {"model": {"l": 1, "m": 1, "pi": "1/2"}, "terms": [{"n": [-1], "coeff": "1"}]}
    code, _, err = run_cli(["special"], json.dumps(payload), capsys, tmp_path)
    assert code == 2
    assert "invariant 'specialness'" in err


def test_denominator_cap_is_input_error(capsys, tmp_path):
    payload = {"v": {"factors": {"2": "1/65"}}, "w": "1"}
    code, _, err = run_cli(["value-cmp"], json.dumps(payload), capsys, tmp_path)
    assert code == 2 and "max-denominator" in err
    code, _, _ = run_cli(["value-cmp", "--max-denominator", "100"], json.dumps(payload), capsys, tmp_path)
    assert code == 0


def test_envelope_input_and_mismatch(capsys, tmp_path):
    env = Envelope("value-cmp", {"v": "1/2", "w": "1/3"}).to_json()
    code, out, _ = run_cli(["value-cmp"], json.dumps(env), capsys, tmp_path)
    assert code == 0 and json.loads(out)["payload"]["ordering"] == "greater"
    code, _, err = run_cli(["eval"], json.dumps(env), capsys, tmp_path)
    assert code == 2 and "envelope is for command" in err


def test_envelope_roundtrip():
    env = Envelope("selftest", {"scale": "0.1"}, seed=7)
    assert Envelope.from_json(json.loads(dump_json(env.to_json()))) == env
    assert json.loads(dump_json(env.to_json())) == env.to_json()
    assert env.version == __version__


def test_cover_is_deterministic_and_emits_artifacts(capsys, tmp_path):
    case = json.loads((GOLDEN / "cover_base_split_fiber_exponent.case.json").read_text())
    text = json.dumps(case["input"])
    svg, csv_path = tmp_path / "c.svg", tmp_path / "c.csv"
    code1, out1, _ = run_cli(["cover", "--emit-svg", str(svg), "--emit-csv", str(csv_path)], text, capsys, tmp_path)
    code2, out2, _ = run_cli(["cover"], text, capsys, tmp_path)
    assert code1 == code2 == 0 and out1 == out2
    assert svg.read_text().startswith("<svg") and "display-only" in svg.read_text()
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "leaf,N,simplex,vertex,x,y"
    leaves = json.loads(out1)["leaves"]
    assert len(rows) - 1 == sum(len(s) for lf in leaves for s in lf["simplices"])


def test_verify_accepts_envelope_and_writes_output(capsys, tmp_path):
    cert = json.loads((GOLDEN / "cover_two_annuli.out.json").read_text())
    env = Envelope("verify", cert).to_json()
    dest = tmp_path / "report.json"
    src = tmp_path / "in.json"
    src.write_text(json.dumps(env))
    assert run(["verify", "--input", str(src), "--output", str(dest)]) == 0
    report = json.loads(dest.read_text())["payload"]
    assert report["valid"] is True and report["triangles"] == 4


def test_selftest_small(capsys):
    code = run(["selftest", "--seed", "3", "--scale", "0.02"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["seed"] == 3 and out["payload"]["passed"] is True
    assert {c["name"] for c in out["payload"]["checks"]} >= {"domination-equivalence", "mutation-robustness"}


def test_module_entry_point_and_logging(tmp_path):
    src = tmp_path / "in.json"
    src.write_text(json.dumps({"base": {"l": 1, "m": 1, "pi": "1/2"}, "n": [0, 0], "pi_1": "1/3", "r": "1/2"}))
    env = dict(os.environ, SS_SKELETON_LOG="INFO")
    proc = subprocess.run(
        [sys.executable, "-m", "ss_skeleton", "cover", "--input", str(src)],
        capture_output=True, text=True, env=env, check=False,
    )
    assert proc.returncode == 0
    assert "verdict: valid" in proc.stderr
    assert json.loads(proc.stdout)["format"] == "ss-skeleton/covering-certificate"
