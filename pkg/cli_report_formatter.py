#!/usr/bin/env python3
"""
REPORT FORMATTER - отчёт о запуске в JSON с фиксированным порядком ключей.
Полная точность в числах, отображение с DISPLAY_DIGITS знаками.
"""

import json
import math
from typing import Optional

import numpy as np
import psutil

from config import DISPLAY_DIGITS
from logger import get_logger
from processor_saddle_pipeline import SaddleProblem, SaddleResult, SaddleStatus

logger = get_logger(__name__)

EXIT_CODES = {
    SaddleStatus.SADDLE_POINTS: 0,
    SaddleStatus.NO_SADDLE: 2,
    SaddleStatus.INCONCLUSIVE: 3,
}
EXIT_ERROR = 1

# Поля, которые меняются от запуска к запуску
TIMING_FIELDS = ("seconds", "resources")


def _num(value) -> Optional[object]:
    """float для JSON: бесконечности строкой, NaN -> null"""
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _vector(values) -> list:
    return [_num(v) for v in np.asarray(values, dtype=float).ravel()]


def format_point(values, digits: int = DISPLAY_DIGITS) -> str:
    """(0.0000, 1.0000, 0.0000); -0.0000 печатается как 0.0000"""
    parts = []
    for v in np.asarray(values, dtype=float).ravel():
        text = f"{v:.{digits}f}"
        if float(text) == 0.0:
            text = f"{0.0:.{digits}f}"
        parts.append(text)
    return "(" + ", ".join(parts) + ")"


def _solver_meta(sp: SaddleProblem) -> dict:
    opts = sp.options
    pop = opts.pop
    return {
        "seed": pop.seed,
        "tol_match": opts.tol_match,
        "tol_feas": pop.tol_feas,
        "rank_tol": pop.rank_tol,
        "sdp_tol": pop.sdp.tol,
        "max_order": pop.max_order,
        "order_slack": pop.order_slack,
        "max_outer_iters": opts.max_outer_iters,
        "ball_radius": pop.ball_radius,
        "sample_count": opts.sample_count,
    }


def _record(record, digits: int) -> dict:
    return {
        "iteration": record.iteration,
        "order": record.order,
        "flat_order": record.flat_order,
        "rank": record.rank,
        "upper_value": _num(record.upper_value),
        "candidates": [
            {
                "x": _vector(c.x),
                "y": _vector(c.y),
                "value": _num(c.value),
                "theta1": _num(c.theta1),
                "theta2": _num(c.theta2),
                "verdict": c.verdict,
                "display": f"x = {format_point(c.x, digits)}, y = {format_point(c.y, digits)}",
            }
            for c in record.checks
        ],
        "k1_added": record.k1_added,
        "k2_added": record.k2_added,
        "k1_size": record.k1_size,
        "k2_size": record.k2_size,
        "sdp_iterations": record.sdp_iterations,
        "seconds": round(record.seconds, 3),
    }


def build_report(name: str, sp: SaddleProblem, result: SaddleResult, wall_seconds: float,
                 digits: int = DISPLAY_DIGITS) -> dict:
    """RunReport: статус, седловые точки, журнал итераций, параметры решателя"""
    bound = result.bound
    report = {
        "problem": name,
        "status": result.status.value,
        "exit_code": EXIT_CODES[result.status],
        "iterations": result.iterations,
        "saddle_points": [
            {
                "x": _vector(p.x),
                "y": _vector(p.y),
                "value": _num(p.value),
                "display": f"x* = {format_point(p.x, digits)}, y* = {format_point(p.y, digits)}, "
                           f"F* = {p.value:.{digits}f}",
            }
            for p in result.points
        ],
        "no_saddle": None,
        "reason": result.reason,
        "iteration_bound": None if bound is None else {
            "value": bound.value,
            "saturated": bound.saturated,
            "a_degrees": list(bound.a_degrees),
            "b_degrees": list(bound.b_degrees),
        },
        "log": [_record(r, digits) for r in result.records],
        "solver": _solver_meta(sp),
        "resources": {
            "wall_seconds": round(wall_seconds, 3),
            "rss_mb": round(psutil.Process().memory_info().rss / 2**20, 1),
        },
    }
    if result.status is SaddleStatus.NO_SADDLE:
        cert = result.certificate
        report["no_saddle"] = {
            "iteration": result.iterations,
            "order": result.infeasible_order,
            "certificate": None if cert is None else {"kind": cert.kind, "violation": _num(cert.violation)},
        }
    return report


def build_error_report(source: str, message: str) -> dict:
    return {"problem": source, "status": "error", "exit_code": EXIT_ERROR, "reason": message}


def build_bound_report(name: str, sp: SaddleProblem, bound) -> dict:
    return {
        "problem": name,
        "status": "bound",
        "exit_code": 0,
        "iteration_bound": {
            "value": bound.value,
            "saturated": bound.saturated,
            "a_degrees": list(bound.a_degrees),
            "b_degrees": list(bound.b_degrees),
        },
        "n": sp.n,
        "m": sp.m,
    }


def strip_timing(report: dict) -> dict:
    """Копия отчёта без полей времени и памяти (для сравнения запусков)"""
    cleaned = {k: v for k, v in report.items() if k not in TIMING_FIELDS}
    if "log" in cleaned:
        cleaned["log"] = [{k: v for k, v in r.items() if k not in TIMING_FIELDS} for r in cleaned["log"]]
    return cleaned


def render_report(report: dict) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2)


def summary_lines(report: dict) -> list:
    """Короткая сводка для лога"""
    lines = [f"📋 {report['problem']}: {report['status']} за {report.get('iterations', 0)} итерац."]
    for point in report.get("saddle_points", []):
        lines.append(f"   🎯 {point['display']}")
    if report.get("reason"):
        lines.append(f"   💬 {report['reason']}")
    return lines
