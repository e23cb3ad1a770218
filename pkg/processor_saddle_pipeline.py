#!/usr/bin/env python3

"""
Saddle Pipeline - седловые точки F(x, y) на X x Y через исключение кандидатов

Внешний цикл: верхняя задача (KKT обоих блоков + ограничения из K1, K2)
даёт кандидатов; для каждого ПАРАЛЛЕЛЬНО решаются нижние задачи
min_x F(x, y*) и max_y F(x*, y); неподходящие кандидаты исключаются
пополнением K1 / K2.
"""

import asyncio
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from config import (
    DEDUP_TOL,
    MAX_OUTER_ITERS,
    MAX_WORKERS,
    NONSINGULAR_TRIALS,
    SAMPLE_COUNT,
    TOL_MATCH,
)
from core_lagrange_presets import (
    ConstraintSet,
    instantiate_multipliers,
    require_nonsingular,
    sample_feasible,
)
from core_polynomial import Block, Polynomial
from core_sdp_solver import InfeasibilityCertificate
from logger import get_logger
from processor_pop_solver import Pop, PopOptions, PopResult, PopSolver, PopStatus, dedup_points

logger = get_logger(__name__)

# Наибольшее значение оценки числа итераций, которое сообщается без флага насыщения
BOUND_LIMIT = 2**63 - 1


class SaddleSetupError(ValueError):
    """F и множества X, Y не согласованы"""


@dataclass(frozen=True)
class SaddleOptions:
    tol_match: float = TOL_MATCH
    max_outer_iters: int = MAX_OUTER_ITERS
    sample_count: int = SAMPLE_COUNT
    nonsingular_trials: int = NONSINGULAR_TRIALS
    max_workers: int = MAX_WORKERS
    pop: PopOptions = field(default_factory=PopOptions)

    @property
    def ball_radius(self) -> Optional[float]:
        return self.pop.ball_radius

    @property
    def seed(self) -> int:
        return self.pop.seed

    def match_tol(self, value: float) -> float:
        return self.tol_match * (1.0 + abs(value))


@dataclass(frozen=True)
class SaddleProblem:
    F: Polynomial
    X: ConstraintSet
    Y: ConstraintSet
    options: SaddleOptions = field(default_factory=SaddleOptions)
    label: str = ""

    def __post_init__(self):
        space = self.F.space
        if space.n < 1 or space.m < 1:
            raise SaddleSetupError(f"нужны оба блока: n={space.n}, m={space.m}")
        if self.X.block is not Block.X or self.Y.block is not Block.Y:
            raise SaddleSetupError("X должно быть множеством блока x, Y - блока y")
        if self.X.dim != space.n or self.Y.dim != space.m:
            raise SaddleSetupError(
                f"размерности множеств ({self.X.dim}, {self.Y.dim}) не совпадают с F ({space.n}, {space.m})"
            )

    @property
    def n(self) -> int:
        return self.F.space.n

    @property
    def m(self) -> int:
        return self.F.space.m


class SaddleStatus(str, Enum):
    SADDLE_POINTS = "saddle_points"
    NO_SADDLE = "no_saddle"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SaddlePoint:
    x: np.ndarray
    y: np.ndarray
    value: float


@dataclass(frozen=True)
class CandidateCheck:
    x: np.ndarray
    y: np.ndarray
    value: float
    theta1: float
    theta2: float
    verdict: str


@dataclass
class IterationRecord:
    iteration: int
    order: int = 0
    flat_order: int = 0
    rank: int = 0
    upper_value: float = np.nan
    checks: list = field(default_factory=list)
    k1_added: int = 0
    k2_added: int = 0
    k1_size: int = 0
    k2_size: int = 0
    sdp_iterations: int = 0
    seconds: float = 0.0


@dataclass(frozen=True)
class IterationBound:
    value: int
    saturated: bool
    a_degrees: tuple = ()
    b_degrees: tuple = ()


@dataclass(frozen=True)
class SaddleResult:
    status: SaddleStatus
    points: tuple = ()
    iterations: int = 0
    records: tuple = ()
    infeasible_order: int = 0
    certificate: Optional[InfeasibilityCertificate] = None
    reason: str = ""
    bound: Optional[IterationBound] = None


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🏗️ ПОСТРОЕНИЕ ЗАДАЧ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _kkt_block(grad_F: tuple, cs: ConstraintSet, multipliers: tuple, constraints: tuple, sign: float):
    """
    (phi, psi) условий KKT одного блока.

    grad_F, multipliers и constraints живут в одном пространстве; sign = +1
    для минимизации (lambda >= 0) и -1 для максимизации (mu <= 0).
    """
    phi, psi = [], []
    gradients = [g.gradient(cs.block) for g in constraints]
    for j, dF in enumerate(grad_F):
        residual = dF
        for lam, grad_g in zip(multipliers, gradients):
            residual = residual - lam * grad_g[j]
        phi.append(residual)
    for i, (g, lam) in enumerate(zip(constraints, multipliers)):
        if cs.is_equality(i):
            phi.append(g)
        else:
            phi.append(lam * g)
            psi.append(g)
            psi.append(lam.scale(sign))
    return phi, psi


def _clean(phi: list, psi: list) -> tuple:
    return tuple(p for p in phi if not p.is_zero), tuple(p for p in psi if not p.is_zero)


def build_upper_pop(sp: SaddleProblem, K1: Sequence = (), K2: Sequence = ()) -> Pop:
    """min F при KKT обоих блоков и F(u, y) >= F(x, y), F(x, v) <= F(x, y)"""
    F = sp.F
    space = F.space
    lam = instantiate_multipliers(sp.X, F)
    mu = instantiate_multipliers(sp.Y, F)
    x_eqs, x_ineqs = sp.X.lifted(space)
    y_eqs, y_ineqs = sp.Y.lifted(space)

    phi_x, psi_x = _kkt_block(F.gradient(Block.X), sp.X, lam, x_eqs + x_ineqs, 1.0)
    phi_y, psi_y = _kkt_block(F.gradient(Block.Y), sp.Y, mu, y_eqs + y_ineqs, -1.0)

    psi = psi_x + psi_y
    for u in K1:
        psi.append(F.substitute_block(Block.X, u).lift(space) - F)
    for v in K2:
        psi.append(F - F.substitute_block(Block.Y, v).lift(space))
    phi, psi = _clean(phi_x + phi_y, psi)
    return Pop(F, phi, psi, label=f"{sp.label or 'saddle'}:upper")


def build_lower_min(sp: SaddleProblem, y_star: Sequence[float]) -> Pop:
    """min_x F(x, y*) по KKT-точкам X"""
    y_star = np.asarray(y_star, dtype=float)
    lam = instantiate_multipliers(sp.X, sp.F)
    Fy = sp.F.substitute_block(Block.Y, y_star)
    lam_y = tuple(p.substitute_block(Block.Y, y_star) for p in lam)
    phi, psi = _kkt_block(Fy.gradient(Block.X), sp.X, lam_y, sp.X.constraints, 1.0)
    phi, psi = _clean(phi, psi)
    return Pop(Fy, phi, psi, label=f"{sp.label or 'saddle'}:min")


def build_lower_max(sp: SaddleProblem, x_star: Sequence[float]) -> Pop:
    """max_y F(x*, y) как min -F(x*, y) по KKT-точкам Y"""
    x_star = np.asarray(x_star, dtype=float)
    mu = instantiate_multipliers(sp.Y, sp.F)
    Fx = sp.F.substitute_block(Block.X, x_star)
    mu_x = tuple(p.substitute_block(Block.X, x_star) for p in mu)
    phi, psi = _kkt_block(Fx.gradient(Block.Y), sp.Y, mu_x, sp.Y.constraints, -1.0)
    phi, psi = _clean(phi, psi)
    return Pop(-Fx, phi, psi, label=f"{sp.label or 'saddle'}:max")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔢 ОЦЕНКА ЧИСЛА ИТЕРАЦИЙ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _complete_homogeneous(values: Sequence[int], degree: int) -> int:
    """h_degree(values) = сумма всех мономов степени degree"""
    h = [1] + [0] * degree
    for v in values:
        for d in range(1, degree + 1):
            h[d] += v * h[d - 1]
    return h[degree]


def iteration_bound(a_degrees: Sequence[int], b_degrees: Sequence[int], n: int, m: int) -> IterationBound:
    """
    Верхняя оценка числа комплексных KKT-точек для общих F, g, h.

    a_degrees = (a0, a1..a_l1): a0 - степень F по x, a_i = deg g_i;
    b_degrees = (b0, b1..b_l2) аналогично для y.
    """
    a_degrees = tuple(int(a) for a in a_degrees)
    b_degrees = tuple(int(b) for b in b_degrees)
    if not a_degrees or not b_degrees or min(a_degrees + b_degrees) < 1:
        raise SaddleSetupError(f"степени должны быть >= 1: a={a_degrees}, b={b_degrees}")
    a0, a = a_degrees[0], a_degrees[1:]
    b0, b = b_degrees[0], b_degrees[1:]

    total = 0
    for r1 in range(min(n, len(a)) + 1):
        for I in combinations(a, r1):
            for r2 in range(min(m, len(b)) + 1):
                for J in combinations(b, r2):
                    weight = math.prod(I) * math.prod(J)
                    s = _complete_homogeneous((a0 + b0,) + I + J, n + m - r1 - r2)
                    total += weight * s
    saturated = total > BOUND_LIMIT
    return IterationBound(min(total, BOUND_LIMIT), saturated, a_degrees, b_degrees)


def problem_bound(sp: SaddleProblem) -> IterationBound:
    a = (max(1, sp.F.degree_in(Block.X)),) + sp.X.degrees
    b = (max(1, sp.F.degree_in(Block.Y)),) + sp.Y.degrees
    return iteration_bound(a, b, sp.n, sp.m)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🎲 ПРОВЕРКА ВЫБОРКОЙ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


@dataclass(frozen=True)
class SampleCheck:
    passed: bool
    worst_x: Optional[np.ndarray] = None
    worst_y: Optional[np.ndarray] = None


def _sample_check(sp: SaddleProblem, x_star: np.ndarray, y_star: np.ndarray, seed: int) -> SampleCheck:
    """F(x*, y) <= F(x*, y*) <= F(x, y*) на случайных точках X и Y"""
    opts = sp.options
    value = sp.F.evaluate(np.concatenate([x_star, y_star]))
    tol = opts.match_tol(value)
    rng = np.random.default_rng(seed)
    xs = sample_feasible(sp.X, opts.sample_count, rng, opts.ball_radius)
    ys = sample_feasible(sp.Y, opts.sample_count, rng, opts.ball_radius)

    worst_x = worst_y = None
    if len(xs):
        values = sp.F.evaluate_many(np.hstack([xs, np.tile(y_star, (len(xs), 1))]))
        best = int(np.argmin(values))
        if values[best] < value - tol:
            worst_x = xs[best]
    if len(ys):
        values = sp.F.evaluate_many(np.hstack([np.tile(x_star, (len(ys), 1)), ys]))
        best = int(np.argmax(values))
        if values[best] > value + tol:
            worst_y = ys[best]
    return SampleCheck(worst_x is None and worst_y is None, worst_x, worst_y)


def verify_saddle(sp: SaddleProblem, x_star: Sequence[float], y_star: Sequence[float]) -> bool:
    """Независимая проверка: новые нижние решения + плотная выборка X и Y"""
    x_star = np.asarray(x_star, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    opts = sp.options
    tol_feas = opts.pop.tol_feas
    if not sp.X.contains(x_star, tol_feas) or not sp.Y.contains(y_star, tol_feas):
        logger.warning(f"⚠️ точка ({np.round(x_star, 4).tolist()}, {np.round(y_star, 4).tolist()}) вне X x Y")
        return False

    value = sp.F.evaluate(np.concatenate([x_star, y_star]))
    tol = opts.match_tol(value)
    solver = PopSolver(opts.pop)
    lower = solver.solve(build_lower_min(sp, y_star))
    upper = solver.solve(build_lower_max(sp, x_star))
    if lower.status is PopStatus.OPTIMAL and lower.value < value - tol:
        logger.info(f"❌ min_x F(x, y*) = {lower.value:.6g} < F = {value:.6g}")
        return False
    if upper.status is PopStatus.OPTIMAL and -upper.value > value + tol:
        logger.info(f"❌ max_y F(x*, y) = {-upper.value:.6g} > F = {value:.6g}")
        return False
    if lower.status is not PopStatus.OPTIMAL or upper.status is not PopStatus.OPTIMAL:
        logger.warning("⚠️ нижняя задача не решена, остаётся только проверка выборкой")

    check = _sample_check(sp, x_star, y_star, opts.seed)
    if not check.passed:
        logger.info("❌ выборка нашла нарушение седлового неравенства")
    return check.passed


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔁 ВНЕШНИЙ ЦИКЛ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _key(point: np.ndarray) -> tuple:
    return tuple(np.round(point, 8).tolist())


class _Inconclusive(Exception):
    """Нижняя задача без ответа: кандидат не принят и не исключён"""


class SaddlePointPipeline:
    def __init__(self, sp: SaddleProblem):
        self.sp = sp
        self.opts = sp.options
        self.solver = PopSolver(self.opts.pop)
        self.K1: list = []
        self.K2: list = []
        self.records: list = []

    async def run(self) -> SaddleResult:
        sp = self.sp
        name = sp.label or "saddle"
        require_nonsingular(sp.X, self.opts.nonsingular_trials, self.opts.seed)
        require_nonsingular(sp.Y, self.opts.nonsingular_trials, self.opts.seed)

        bound = problem_bound(sp)
        cap = self.opts.max_outer_iters
        if not bound.saturated and bound.value < cap:
            cap = bound.value
        logger.info(
            f"🔢 {name}: оценка итераций M = {bound.value}{' (насыщена)' if bound.saturated else ''}, "
            f"лимит {cap}"
        )

        with ThreadPoolExecutor(max_workers=self.opts.max_workers) as executor:
            self._executor = executor
            for iteration in range(1, cap + 1):
                started = time.perf_counter()
                record = IterationRecord(iteration)
                self.records.append(record)

                upper = await self._solve(build_upper_pop(sp, self.K1, self.K2))
                record.sdp_iterations += upper.sdp_iterations
                record.order = upper.order

                if upper.status is PopStatus.INFEASIBLE:
                    record.seconds = time.perf_counter() - started
                    logger.info(f"✅ {name}: седловых точек нет (итерация {iteration}, k={upper.order})")
                    return self._result(SaddleStatus.NO_SADDLE, iteration, bound,
                                        infeasible_order=upper.order, certificate=upper.certificate,
                                        reason="верхняя релаксация несовместна")
                if upper.status is PopStatus.INCONCLUSIVE:
                    record.seconds = time.perf_counter() - started
                    return self._result(SaddleStatus.INCONCLUSIVE, iteration, bound,
                                        reason=f"верхняя задача: {upper.message}")

                record.flat_order, record.rank, record.upper_value = upper.flat_order, upper.rank, upper.value
                try:
                    saddles = await self._check_candidates(upper, record)
                except _Inconclusive as e:
                    record.seconds = time.perf_counter() - started
                    return self._result(SaddleStatus.INCONCLUSIVE, iteration, bound, reason=str(e))

                record.k1_size, record.k2_size = len(self.K1), len(self.K2)
                record.seconds = time.perf_counter() - started
                logger.info(
                    f"🔁 {name}: итерация {iteration}: кандидатов {len(record.checks)}, "
                    f"K1 +{record.k1_added} = {record.k1_size}, K2 +{record.k2_added} = {record.k2_size}"
                )
                if saddles:
                    logger.info(f"✅ {name}: найдено седловых точек: {len(saddles)}")
                    return self._result(SaddleStatus.SADDLE_POINTS, iteration, bound, points=tuple(saddles))
                if record.k1_added == 0 and record.k2_added == 0:
                    return self._result(SaddleStatus.INCONCLUSIVE, iteration, bound,
                                        reason="кандидаты не исключены, K1 и K2 не выросли")

        logger.warning(f"⚠️ {name}: исчерпан лимит {cap} внешних итераций")
        return self._result(SaddleStatus.INCONCLUSIVE, cap, bound, reason=f"лимит итераций {cap}")

    async def _check_candidates(self, upper: PopResult, record: IterationRecord) -> list:
        """Шаг нижнего уровня: для всех кандидатов параллельно min по x и max по y"""
        n = self.sp.n
        candidates = [(p[:n], p[n:]) for p in upper.points]
        ys = {_key(y): y for _, y in candidates}
        xs = {_key(x): x for x, _ in candidates}

        min_tasks = [asyncio.create_task(self._solve(build_lower_min(self.sp, y))) for y in ys.values()]
        max_tasks = [asyncio.create_task(self._solve(build_lower_max(self.sp, x))) for x in xs.values()]
        results = await asyncio.gather(*min_tasks, *max_tasks, return_exceptions=True)

        for result in results:
            if isinstance(result, Exception):
                logger.error(f"Ошибка нижней задачи: {result}")
                raise _Inconclusive(f"ошибка нижней задачи: {result}")
        lows = dict(zip(ys, results[: len(ys)]))
        highs = dict(zip(xs, results[len(ys):]))
        for result in results:
            record.sdp_iterations += result.sdp_iterations
            if result.status is not PopStatus.OPTIMAL:
                raise _Inconclusive(f"нижняя задача без ответа: {result.status.value}, {result.message}")

        saddles = []
        for x_star, y_star in candidates:
            low, high = lows[_key(y_star)], highs[_key(x_star)]
            value = self.sp.F.evaluate(np.concatenate([x_star, y_star]))
            theta1, theta2 = low.value, -high.value
            tol = self.opts.match_tol(value)
            excluded = False
            verdict = "saddle"
            if value > theta1 + tol:
                record.k1_added += self._grow(self.K1, low.points)
                excluded, verdict = True, "min"
            if value < theta2 - tol:
                record.k2_added += self._grow(self.K2, high.points)
                excluded, verdict = True, "max" if verdict == "saddle" else "both"
            if not excluded:
                check = _sample_check(self.sp, x_star, y_star, self.opts.seed)
                if check.passed:
                    saddles.append(SaddlePoint(x_star, y_star, value))
                else:
                    verdict = "sampled"
                    if check.worst_x is not None:
                        record.k1_added += self._grow(self.K1, [check.worst_x])
                    if check.worst_y is not None:
                        record.k2_added += self._grow(self.K2, [check.worst_y])
                    logger.warning(
                        f"⚠️ кандидат ({np.round(x_star, 4).tolist()}, {np.round(y_star, 4).tolist()}) "
                        f"опровергнут выборкой"
                    )
            record.checks.append(CandidateCheck(x_star, y_star, value, theta1, theta2, verdict))
            logger.debug(f"🔍 F = {value:.6g}, theta1 = {theta1:.6g}, theta2 = {theta2:.6g} -> {verdict}")
        return saddles

    @staticmethod
    def _grow(target: list, points: Sequence) -> int:
        before = len(target)
        merged = dedup_points(list(target) + [np.asarray(p, dtype=float) for p in points], DEDUP_TOL)
        target[:] = merged
        return len(target) - before

    async def _solve(self, pop: Pop) -> PopResult:
        """Решение POP в пуле потоков"""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, self.solver.solve, pop)

    def _result(self, status: SaddleStatus, iterations: int, bound: IterationBound, **kwargs) -> SaddleResult:
        return SaddleResult(status, iterations=iterations, records=tuple(self.records), bound=bound, **kwargs)


def solve_saddle(sp: SaddleProblem) -> SaddleResult:
    return asyncio.run(SaddlePointPipeline(sp).run())


def with_options(sp: SaddleProblem, **overrides) -> SaddleProblem:
    """Копия задачи с заменёнными опциями (поля PopOptions тоже принимаются)"""
    pop_fields = {k: overrides.pop(k) for k in list(overrides) if k in PopOptions.__dataclass_fields__}
    options = sp.options
    if pop_fields:
        options = replace(options, pop=replace(options.pop, **pop_fields))
    if overrides:
        options = replace(options, **overrides)
    return replace(sp, options=options)
