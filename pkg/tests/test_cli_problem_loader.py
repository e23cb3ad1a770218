import json
from pathlib import Path

import pytest

from cli_problem_loader import ProblemFileError, load_problem, load_problem_text
from core_lagrange_presets import PresetKind

PROBLEMS = sorted((Path(__file__).parent.parent / "problems").glob("*.json"))


def problem_text(**fields):
    data = {"nx": 1, "ny": 1, "F": "x1*y1", "X": {"preset": "ball"}, "Y": {"preset": "box"}}
    data.update(fields)
    return json.dumps(data, indent=2)


@pytest.mark.parametrize("path", PROBLEMS, ids=lambda p: p.stem)
def test_bundled_problems_load(path):
    loaded = load_problem(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    sp = loaded.problem
    assert loaded.path == path
    assert loaded.name == raw["name"]
    assert (sp.n, sp.m) == (raw["nx"], raw["ny"])
    assert raw["expected"]["status"] in ("saddle_points", "no_saddle")
    if "ball_radius" in raw.get("options", {}):
        assert sp.options.ball_radius == raw["options"]["ball_radius"]


def test_bundled_problem_count():
    assert len(PROBLEMS) == 15


def test_custom_sets_are_built():
    loaded = load_problem(Path(__file__).parent.parent / "problems" / "hyperbolic.json")
    X = loaded.problem.X
    assert X.kind is PresetKind.CUSTOM
    assert X.name == "hyperbolic-x"
    assert len(X.inequalities) == 3


def test_overrides_win_over_file_options():
    text = problem_text(options={"max_order": 3, "seed": 1})
    loaded = load_problem_text(text, {"max_order": 5, "seed": None, "tol_match": 1e-4})
    opts = loaded.problem.options
    assert opts.pop.max_order == 5
    assert opts.seed == 1
    assert opts.tol_match == 1e-4
    assert loaded.options == {"max_order": 5, "seed": 1, "tol_match": 1e-4}


def test_syntax_error_points_into_file():
    text = '{\n  "nx": 1, "ny": 1,\n  "F": "x1 + z9",\n  "X": {"preset": "ball"},\n  "Y": {"preset": "ball"}\n}'
    with pytest.raises(ProblemFileError) as info:
        load_problem_text(text)
    assert info.value.line == 3
    assert info.value.column == 14


def test_invalid_json_reports_position():
    with pytest.raises(ProblemFileError) as info:
        load_problem_text('{"nx": 1,,}')
    assert info.value.line == 1
    assert info.value.column > 0


@pytest.mark.parametrize(
    "fields, fragment",
    [
        ({"options": {"speed": 2}}, "speed"),
        ({"options": {"max_order": "many"}}, "max_order"),
        ({"X": {"preset": "torus"}}, "torus"),
        ({"X": {"preset": "ball", "custom": {}}}, "preset"),
        ({"nx": 0}, "nx"),
        ({"Y": {"custom": {"inequalities": ["y1"], "multipliers": []}}}, "множителей"),
        ({"Y": {"custom": {"inequalities": ["y1"], "multipliers": ["dF/dx1"]}}}, "multipliers[0]"),
        ({"Y": {"custom": {"inequalities": ["y1"], "weights": [1]}}}, "weights"),
    ],
)
def test_rejected_problems(fields, fragment):
    with pytest.raises(ProblemFileError) as info:
        load_problem_text(problem_text(**fields))
    assert fragment in str(info.value)


def test_missing_field():
    data = json.loads(problem_text())
    del data["F"]
    with pytest.raises(ProblemFileError) as info:
        load_problem_text(json.dumps(data))
    assert "'F'" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ProblemFileError):
        load_problem(tmp_path / "absent.json")
