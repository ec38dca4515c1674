from __future__ import annotations

import json
import shutil
import subprocess
import sys

import pytest

from lsc import data_text
from lsc.cli import main


@pytest.fixture
def files(tmp_path):
    """Copy the bundled circuits and placements into a scratch directory."""
    def path(name):
        p = tmp_path / name
        if not p.exists():
            p.write_text(data_text(name))
        return str(p)

    return path


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_compile_shared_target_naive(files, capsys, golden):
    code, out, _ = run(["compile", files("shared_target.icm")], capsys)
    assert code == 0
    assert out == golden("shared_target.schedule.json")
    assert len(json.loads(out)["steps"]) == 3


def test_compile_steane_with_placement(files, capsys, tmp_path):
    target = tmp_path / "steane.json"
    code, out, _ = run(["compile", files("steane.icm"), "--placement", files("steane.place"), "--out", str(target)], capsys)
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert len(data["steps"]) == 7
    assert list(data)[:4] == ["grid", "steps", "corrections", "qubit_map"]


def test_repeated_runs_are_identical(files, capsys):
    argv = ["compile", files("reed_muller.icm"), "--placement", files("reed_muller.place")]
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first == second and first[0] == 0


def test_verify_shared_target(files, capsys):
    code, out, _ = run(["verify", files("shared_target.icm")], capsys)
    assert code == 0
    assert out.splitlines()[1:4] == ["  +XIX", "  +IXX", "  +ZZZ"]
    assert out.rstrip().endswith("PASS (9 merge-outcome branches)")


def test_verify_steane(files, capsys, golden):
    code, out, _ = run(["verify", files("steane.icm"), "--placement", files("steane.place")], capsys)
    assert code == 0
    assert out == golden("steane.verify.txt")


def test_deleted_merge_fails(files, capsys, tmp_path):
    _, text, _ = run(["compile", files("shared_target.icm")], capsys)
    broken = tmp_path / "broken.json"
    data = json.loads(text)
    t = data["phases"].index("merge")
    del data["steps"][t], data["phases"][t]
    data["corrections"] = []  # keep the schedule well formed so the replay itself must catch it
    broken.write_text(json.dumps(data))
    code, out, _ = run(["verify", files("shared_target.icm"), "--schedule", str(broken)], capsys)
    assert code == 4
    assert out.rstrip().endswith("FAIL (1 merge-outcome branches)")


def test_deleted_merge_in_larger_schedule_fails(files, capsys, tmp_path):
    _, text, _ = run(["compile", files("steane.icm"), "--placement", files("steane.place")], capsys)
    data = json.loads(text)
    t = data["phases"].index("merge")
    data["steps"][t] = data["steps"][t][1:]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(data))
    code, _, err = run(["verify", files("steane.icm"), "--schedule", str(broken)], capsys)
    assert code == 4
    assert "FAIL" in err


def test_estimate_report(files, capsys, tmp_path):
    report = tmp_path / "est.json"
    argv = ["estimate", files("bravyi_haah.icm"), "--placement", files("bravyi_haah.place"), "--baseline", "BH_BRAID", "--distance", "7", "--out", str(report)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert "patches P = 126" in out and "2268d^3" in out
    data = json.loads(report.read_text())
    assert data["volume_coefficient"] == 2268
    assert data["comparison"]["ratio_exact"] == "567/1172"
    assert data["at_distance"]["cycles"] == 63


def test_estimate_and_render_accept_schedule_json(files, capsys, tmp_path):
    _, text, _ = run(["compile", files("steane.icm"), "--placement", files("steane.place")], capsys)
    sched = tmp_path / "s.json"
    sched.write_text(text)
    code, out, _ = run(["estimate", str(sched)], capsys)
    assert code == 0 and "280d^3" in out
    code, out, _ = run(["render", str(sched)], capsys)
    assert code == 0 and out.count("step ") == 7


def test_render_formats(files, capsys, golden):
    code, out, _ = run(["render", files("shared_target.icm")], capsys)
    assert code == 0 and out == golden("shared_target.render.txt")
    code, out, _ = run(["render", files("shared_target.icm"), "--format", "svg"], capsys)
    assert code == 0 and out.startswith("<svg")
    code, _, err = run(["render", files("shared_target.icm"), "--format", "gif"], capsys)
    assert code == 1 and "unknown render format" in err


@pytest.mark.parametrize(
    "text, code",
    [
        ("qubits 2\ninit 0 +\ninit 1 0\ncnot 0 ->\n", 1),
        ("qubits 2\ninit 0 +\ninit 1 0\nmeasure 0 X\ncnot 0 -> 1\n", 2),
        ("qubits 3\ninit 0 +\ninit 1 A\ninit 2 0\ncnot 0 -> 1\ncnot 1 -> 2\nmeasure 0 X\n", 2),
    ],
)
def test_compile_error_codes(tmp_path, capsys, text, code):
    src = tmp_path / "c.icm"
    src.write_text(text)
    got, _, err = run(["compile", str(src)], capsys)
    assert got == code
    assert err.startswith("lsc: ")


def test_infeasible_placement_exit_code(files, capsys, tmp_path):
    place = tmp_path / "missing.place"
    place.write_text(data_text("steane.place").replace("at 4 3 7\n", "at 4 3 free\n"))
    code, _, err = run(["compile", files("steane.icm"), "--placement", str(place)], capsys)
    assert code == 3 and "infeasible" in err


def test_usage_errors(files, capsys):
    assert run([], capsys)[0] == 1
    assert run(["compile", "/nonexistent.icm"], capsys)[0] == 1
    assert run(["estimate", files("shared_target.icm"), "--baseline", "NOPE"], capsys)[0] == 1
    assert run(["estimate", files("shared_target.icm"), "--distance", "0"], capsys)[0] == 1
    assert run(["compile", files("shared_target.icm"), "--layout", "naive", "--placement", files("steane.place")], capsys)[0] == 1


def test_bad_schedule_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["estimate", str(bad)], capsys)[0] == 1


@pytest.mark.skipif(shutil.which("lsc") is None, reason="console script not installed")
def test_console_script(files):
    out = subprocess.run(["lsc", "verify", files("shared_target.icm")], capture_output=True, text=True)
    assert out.returncode == 0 and "PASS" in out.stdout


def test_module_entry(files):
    out = subprocess.run([sys.executable, "-m", "lsc.cli", "estimate", files("shared_target.icm")], capture_output=True, text=True)
    assert out.returncode == 0 and "timesteps T = 3" in out.stdout
