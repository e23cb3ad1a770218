#!/usr/bin/env python3

"""
📂 PROBLEM LOADER - чтение JSON-файлов задач о седловых точках

Формат:
    {
      "name": "simplex-1",
      "nx": 3, "ny": 3,
      "F": "x1*x2 + x2*x3 + ...",
      "X": {"preset": "simplex"},
      "Y": {"custom": {"equalities": [...], "inequalities": [...],
                       "multipliers": ["(1 - y1*y2)*dF/dy1", ...]}},
      "options": {"ball_radius": 10, "max_order": 5, ...}
    }
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from core_lagrange_presets import (
    ConstraintSet,
    ConstraintSetError,
    LagrangeTemplateError,
    PresetKind,
    custom_set,
    preset,
    template_from_expression,
)
from core_polynomial import Block, PolynomialError, PolynomialSyntaxError, VarSpace, parse_poly
from logger import get_logger
from processor_saddle_pipeline import SaddleProblem, SaddleSetupError, with_options

logger = get_logger(__name__)

# Ключи options -> поля SaddleOptions / PopOptions
OPTION_TYPES = {
    "tol_match": float,
    "max_outer_iters": int,
    "sample_count": int,
    "nonsingular_trials": int,
    "max_order": int,
    "rank_tol": float,
    "tol_feas": float,
    "seed": int,
    "ball_radius": float,
}


class ProblemFileError(ValueError):
    """Файл задачи не разобран или не прошёл проверку"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f" (строка {line}, столбец {column})" if line else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class LoadedProblem:
    problem: SaddleProblem
    path: Optional[Path] = None
    name: str = ""
    description: str = ""
    options: dict = field(default_factory=dict)


def _locate(raw: str, expr: str, position: int) -> tuple:
    """(строка, столбец) символа position внутри строкового литерала expr"""
    literal = json.dumps(expr, ensure_ascii=False)[1:-1]
    offset = raw.find(literal)
    if offset < 0:
        return 0, 0
    offset += position
    line = raw.count("\n", 0, offset) + 1
    column = offset - (raw.rfind("\n", 0, offset) + 1) + 1
    return line, column


class _Loader:
    def __init__(self, raw: str, source: str):
        self.raw = raw
        self.source = source

    def fail(self, message: str, expr: str = None, position: int = 0):
        line, column = _locate(self.raw, expr, position) if expr is not None else (0, 0)
        raise ProblemFileError(f"{self.source}: {message}", line, column)

    def poly(self, expr, space: VarSpace, what: str):
        if not isinstance(expr, str):
            self.fail(f"{what}: ожидалась строка, получено {type(expr).__name__}")
        try:
            return parse_poly(expr, space)
        except PolynomialSyntaxError as e:
            self.fail(f"{what}: {e}", expr, e.position)
        except PolynomialError as e:
            self.fail(f"{what}: {e}", expr)

    def template(self, expr, block: Block, dim: int, what: str):
        if not isinstance(expr, str):
            self.fail(f"{what}: ожидалась строка")
        try:
            return template_from_expression(expr, block, dim)
        except LagrangeTemplateError as e:
            cause = e.__cause__
            position = cause.position if isinstance(cause, PolynomialSyntaxError) else 0
            self.fail(f"{what}: {e}", expr, position)

    def constraint_set(self, spec, block: Block, dim: int) -> ConstraintSet:
        label = block.value.upper()
        if not isinstance(spec, dict) or len(spec) != 1 or next(iter(spec)) not in ("preset", "custom"):
            self.fail(f"{label}: ожидалось {{\"preset\": ...}} или {{\"custom\": {{...}}}}")
        if "preset" in spec:
            try:
                kind = PresetKind(spec["preset"])
                return preset(kind, block, dim)
            except ValueError as e:
                self.fail(f"{label}: неизвестный или некорректный пресет '{spec['preset']}': {e}")

        body = spec["custom"]
        if not isinstance(body, dict):
            self.fail(f"{label}.custom: ожидался объект")
        unknown = set(body) - {"equalities", "inequalities", "multipliers", "name"}
        if unknown:
            self.fail(f"{label}.custom: неизвестные ключи {sorted(unknown)}")
        space = VarSpace(dim, 0) if block is Block.X else VarSpace(0, dim)
        eqs = [self.poly(e, space, f"{label}.equalities[{i}]") for i, e in enumerate(body.get("equalities", []))]
        ineqs = [self.poly(e, space, f"{label}.inequalities[{i}]") for i, e in enumerate(body.get("inequalities", []))]
        multipliers = body.get("multipliers", [])
        if len(multipliers) != len(eqs) + len(ineqs):
            self.fail(f"{label}: множителей {len(multipliers)}, ограничений {len(eqs) + len(ineqs)}")
        templates = [self.template(e, block, dim, f"{label}.multipliers[{i}]") for i, e in enumerate(multipliers)]
        try:
            return custom_set(block, dim, eqs, ineqs, templates, name=body.get("name", f"custom-{block.value}"))
        except (ConstraintSetError, LagrangeTemplateError) as e:
            self.fail(f"{label}: {e}")

    def options(self, raw_options, overrides: dict) -> dict:
        if not isinstance(raw_options, dict):
            self.fail("options: ожидался объект")
        merged = {}
        for key, value in {**raw_options, **{k: v for k, v in overrides.items() if v is not None}}.items():
            if key not in OPTION_TYPES:
                self.fail(f"options: неизвестный параметр '{key}'")
            try:
                merged[key] = OPTION_TYPES[key](value)
            except (TypeError, ValueError):
                self.fail(f"options.{key}: некорректное значение {value!r}")
        return merged


def load_problem_text(raw: str, overrides: Optional[dict] = None, source: str = "<text>") -> LoadedProblem:
    """Разобрать текст задачи; overrides (флаги CLI) важнее options файла"""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ProblemFileError(f"{source}: некорректный JSON: {e.msg}", e.lineno, e.colno) from e
    loader = _Loader(raw, source)
    if not isinstance(data, dict):
        loader.fail("ожидался JSON-объект")
    for key in ("nx", "ny", "F", "X", "Y"):
        if key not in data:
            loader.fail(f"нет обязательного поля '{key}'")
    nx, ny = data["nx"], data["ny"]
    if not (isinstance(nx, int) and isinstance(ny, int)) or nx < 1 or ny < 1:
        loader.fail(f"nx и ny должны быть целыми >= 1, получено {nx!r}, {ny!r}")

    F = loader.poly(data["F"], VarSpace(nx, ny), "F")
    X = loader.constraint_set(data["X"], Block.X, nx)
    Y = loader.constraint_set(data["Y"], Block.Y, ny)
    options = loader.options(data.get("options", {}), overrides or {})
    name = str(data.get("name", Path(source).stem))

    try:
        problem = with_options(SaddleProblem(F, X, Y, label=name), **options)
    except SaddleSetupError as e:
        loader.fail(str(e))
    logger.info(f"📂 {name}: n={nx}, m={ny}, deg F = {F.degree}, X = {X.name}, Y = {Y.name}")
    return LoadedProblem(problem, None, name, str(data.get("description", "")), options)


def load_problem(path: Union[str, Path], overrides: Optional[dict] = None) -> LoadedProblem:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFileError(f"не удалось прочитать {path}: {e}") from e
    loaded = load_problem_text(raw, overrides, source=str(path))
    return LoadedProblem(loaded.problem, path, loaded.name, loaded.description, loaded.options)
