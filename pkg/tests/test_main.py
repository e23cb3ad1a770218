import json
from pathlib import Path

import numpy as np
import pytest

from core_sdpa_format import read_sdpa
from main import ExportSpecError, export_sdp, run
from cli_problem_loader import load_problem

PROBLEMS = Path(__file__).parent.parent / "problems"


def output_report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def write_problem(tmp_path, **fields) -> Path:
    data = {"name": "tiny", "nx": 1, "ny": 1, "F": "x1^2 - y1^2", "X": {"preset": "ball"},
            "Y": {"preset": "ball"}, "options": {"sample_count": 300}}
    data.update(fields)
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_bound_only(capsys):
    code = run([str(PROBLEMS / "simplex_1.json"), "--bound-only"])
    report = output_report(capsys)
    assert code == 0
    assert report["status"] == "bound"
    assert report["n"] == report["m"] == 3
    assert report["iteration_bound"]["value"] > 0


def test_malformed_problem_exits_with_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"nx": 1, "ny": 1, "F": "x1 +", "X": {"preset": "ball"}, "Y": {"preset": "ball"}}',
                    encoding="utf-8")
    code = run([str(path)])
    report = output_report(capsys)
    assert code == 1
    assert report["status"] == "error"
    assert "F" in report["reason"]


def test_missing_problem_file(tmp_path, capsys):
    assert run([str(tmp_path / "nope.json")]) == 1
    assert output_report(capsys)["exit_code"] == 1


def test_export_writes_sdpa_files(tmp_path, capsys):
    target = tmp_path / "out" / "upper.dat-s"
    lower = tmp_path / "out" / "lower.dat-s"
    code = run([str(write_problem(tmp_path)), "--export-sdp", f"upper:2:{target}",
                "--export-sdp", f"lower-min@0.5:2:{lower}"])
    report = output_report(capsys)
    assert code == 0
    assert report["status"] == "exported"
    assert report["files"] == [str(target), str(lower)]
    assert read_sdpa(target).nvar == 15
    assert read_sdpa(lower).nvar == 5


def test_export_applies_ball_radius(tmp_path):
    sp = load_problem(write_problem(tmp_path), {"ball_radius": 3.0}).problem
    path = export_sdp(sp, f"lower-max@0.1:2:{tmp_path / 'max.dat-s'}")
    prob = read_sdpa(path)
    # M_2, g, знак множителя и шар
    assert len(prob.blocks) == 4


@pytest.mark.parametrize(
    "selector",
    ["upper", "upper:two:x.dat-s", "middle:2:x.dat-s", "lower-min@1,2:2:x.dat-s", "lower-max@a:2:x.dat-s"],
)
def test_bad_export_selector(tmp_path, selector):
    sp = load_problem(write_problem(tmp_path)).problem
    with pytest.raises(ExportSpecError):
        export_sdp(sp, selector)


def test_bad_export_selector_exit_code(tmp_path, capsys):
    assert run([str(write_problem(tmp_path)), "--export-sdp", "upper"]) == 1
    assert output_report(capsys)["status"] == "error"


def test_full_run_finds_saddle(tmp_path, capsys):
    code = run([str(write_problem(tmp_path)), "--seed", "3"])
    report = output_report(capsys)
    assert code == 0
    assert report["status"] == "saddle_points"
    assert report["solver"]["seed"] == 3
    point = report["saddle_points"][0]
    assert np.allclose(point["x"] + point["y"], [0.0, 0.0], atol=1e-5)
