#!/usr/bin/env python3

"""
🚀 MAIN.PY - ПОИСК СЕДЛОВЫХ ТОЧЕК МНОГОЧЛЕНОВ
Отчёт (JSON) печатается в stdout, журнал - в stderr и logs/saddle.log

    python main.py problems/simplex_1.json
    python main.py problems/orthant.json --ball-radius 10
    python main.py problems/simplex_1.json --export-sdp upper:2:out/upper.dat-s
    python main.py problems/simplex_1.json --bound-only

Коды выхода: 0 - седловые точки найдены, 2 - седловых точек нет,
3 - ответ не получен, 1 - ошибка входных данных или решателя.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from cli_problem_loader import ProblemFileError, load_problem
from cli_report_formatter import (
    EXIT_CODES,
    EXIT_ERROR,
    build_bound_report,
    build_error_report,
    build_report,
    render_report,
    summary_lines,
)
from config import print_config
from core_lagrange_presets import ConstraintSetError, LagrangeTemplateError, NonsingularityError
from core_moment_toolkit import MomentDegreeError
from core_polynomial import PolynomialError
from core_sdp_solver import InconsistentEqualitiesError, SdpProblemError
from core_sdpa_format import SdpaFormatError, write_sdpa
from logger import get_logger, problem_context
from processor_pop_solver import ExtractionError, RelaxationOrderError, build_relaxation
from processor_saddle_pipeline import (
    SaddleProblem,
    SaddleSetupError,
    build_lower_max,
    build_lower_min,
    build_upper_pop,
    problem_bound,
    solve_saddle,
)

logger = get_logger(__name__)

KNOWN_ERRORS = (
    ProblemFileError,
    PolynomialError,
    ConstraintSetError,
    LagrangeTemplateError,
    NonsingularityError,
    MomentDegreeError,
    SdpProblemError,
    InconsistentEqualitiesError,
    RelaxationOrderError,
    ExtractionError,
    SaddleSetupError,
    SdpaFormatError,
)


class ExportSpecError(ValueError):
    """Некорректный селектор --export-sdp"""


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="saddle",
        description="Седловые точки многочлена F(x, y) на X x Y через моментные релаксации",
    )
    parser.add_argument("problem", type=Path, help="JSON-файл задачи")
    parser.add_argument("--max-order", type=int, help="предельный порядок релаксации k")
    parser.add_argument("--max-iters", type=int, dest="max_outer_iters", help="лимит внешних итераций")
    parser.add_argument("--tol", type=float, dest="tol_match", help="допуск сравнения F с theta1/theta2")
    parser.add_argument("--rank-tol", type=float, help="относительный порог численного ранга")
    parser.add_argument("--seed", type=int, help="зерно генератора")
    parser.add_argument("--ball-radius", type=float, help="добавить R^2 - |z|^2 >= 0 во все задачи")
    parser.add_argument(
        "--export-sdp",
        action="append",
        default=[],
        metavar="STAGE:K:PATH",
        help="записать релаксацию в SDPA: upper | lower-min@y1,..,ym | lower-max@x1,..,xn",
    )
    parser.add_argument("--bound-only", action="store_true", help="только оценка числа итераций")
    parser.add_argument("--print-config", action="store_true", help="вывести конфигурацию в stderr")
    return parser.parse_args(argv)


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "max_order": args.max_order,
        "max_outer_iters": args.max_outer_iters,
        "tol_match": args.tol_match,
        "rank_tol": args.rank_tol,
        "seed": args.seed,
        "ball_radius": args.ball_radius,
    }


def _vector(text: str, size: int, what: str) -> np.ndarray:
    try:
        values = np.array([float(v) for v in text.split(",")])
    except ValueError as e:
        raise ExportSpecError(f"{what}: не разобраны координаты '{text}'") from e
    if values.shape[0] != size:
        raise ExportSpecError(f"{what}: ожидалось {size} координат, получено {values.shape[0]}")
    return values


def export_sdp(sp: SaddleProblem, selector: str) -> Path:
    """Записать релаксацию выбранной задачи (upper / lower-min@y / lower-max@x) порядка k"""
    try:
        stage, order, path = selector.split(":", 2)
        k = int(order)
    except ValueError as e:
        raise ExportSpecError(f"ожидалось STAGE:K:PATH, получено '{selector}'") from e
    stage, _, point = stage.partition("@")
    if stage == "upper":
        pop = build_upper_pop(sp)
    elif stage == "lower-min":
        pop = build_lower_min(sp, _vector(point, sp.m, stage))
    elif stage == "lower-max":
        pop = build_lower_max(sp, _vector(point, sp.n, stage))
    else:
        raise ExportSpecError(f"неизвестная стадия '{stage}' (upper, lower-min@y, lower-max@x)")
    pop = pop.with_ball(sp.options.ball_radius)
    prob = build_relaxation(pop, k)
    comment = f"{sp.label}: {stage}{'@' + point if point else ''}, k={k}"
    return write_sdpa(prob, path, comment=comment)


def run(argv=None) -> int:
    args = parse_args(argv)
    if args.print_config:
        print_config()
    source = str(args.problem)
    with problem_context(args.problem.stem):
        return _run(args, source)


def _run(args, source: str) -> int:
    started = time.perf_counter()
    try:
        loaded = load_problem(args.problem, _overrides(args))
        sp = loaded.problem

        if args.bound_only:
            report = build_bound_report(loaded.name, sp, problem_bound(sp))
            print(render_report(report))
            return 0

        if args.export_sdp:
            paths = [str(export_sdp(sp, selector)) for selector in args.export_sdp]
            print(render_report({"problem": loaded.name, "status": "exported", "exit_code": 0, "files": paths}))
            return 0

        result = solve_saddle(sp)
        report = build_report(loaded.name, sp, result, time.perf_counter() - started)
        for line in summary_lines(report):
            logger.info(line)
        print(render_report(report))
        return EXIT_CODES[result.status]

    except KNOWN_ERRORS + (ExportSpecError,) as e:
        logger.error(f"❌ {e}")
        print(render_report(build_error_report(source, str(e))))
        return EXIT_ERROR
    except KeyboardInterrupt:
        logger.info("⛔ Остановлено (Ctrl+C)")
        print(render_report(build_error_report(source, "прервано")))
        return EXIT_ERROR
    except Exception as e:
        logger.exception(f"🚨 CRITICAL ERROR: {e}")
        print(render_report(build_error_report(source, f"внутренняя ошибка: {e}")))
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
