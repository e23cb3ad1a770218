#!/usr/bin/env python3

"""
POP Solver - иерархия моментных релаксаций для
    min f(z)  при  phi(z) = 0,  psi(z) >= 0

Порядок k растёт от d0; на каждом порядке решается SDP, проверяется
плоское усечение rank M_t = rank M_{t-d0} и извлекаются минимизаторы.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from config import DEDUP_TOL, ORDER_SLACK, RANK_TOL, SDP_ACCEPT_TOL, SEED, TOL_FEAS
from core_moment_toolkit import (
    Tms,
    basis_index,
    basis_size,
    localizing_operator,
    moment_matrix,
    moment_operator,
    monomial_basis,
    riesz_vector,
)
from core_polynomial import Polynomial, VarSpace, VarSpaceMismatchError, squared_norm
from core_sdp_solver import (
    InfeasibilityCertificate,
    LmiBlock,
    SdpOptions,
    SdpProblem,
    SdpStatus,
    solve_sdp,
)
from logger import get_logger

logger = get_logger(__name__)

OBJECTIVE_MATCH = 1e-5


class RelaxationOrderError(ValueError):
    """Порядок релаксации меньше d0"""


class ExtractionError(RuntimeError):
    """Извлечение минимизаторов не удалось"""


@dataclass(frozen=True)
class Pop:
    objective: Polynomial
    equalities: tuple = ()
    inequalities: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for poly in self.equalities + self.inequalities:
            if poly.space != self.objective.space:
                raise VarSpaceMismatchError(f"{self.label}: ограничение из другого пространства")

    @property
    def space(self) -> VarSpace:
        return self.objective.space

    @property
    def d0(self) -> int:
        degrees = [p.degree for p in (self.objective,) + self.equalities + self.inequalities]
        return max(1, math.ceil(max(degrees) / 2))

    def with_ball(self, radius: Optional[float]) -> "Pop":
        """Архимедово усиление: добавить R^2 - |z|^2 >= 0"""
        if radius is None:
            return self
        ball = float(radius) ** 2 - squared_norm(self.space)
        return Pop(self.objective, self.equalities, self.inequalities + (ball,), self.label)


class PopStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PopResult:
    status: PopStatus
    points: tuple = ()
    value: float = np.nan
    order: int = 0
    flat_order: int = 0
    rank: int = 0
    lower_bounds: tuple = ()
    certificate: Optional[InfeasibilityCertificate] = None
    sdp_iterations: int = 0
    message: str = ""

    @property
    def best_lower_bound(self) -> float:
        finite = [v for _, v in self.lower_bounds if np.isfinite(v)]
        return max(finite) if finite else -np.inf


@dataclass(frozen=True)
class PopOptions:
    max_order: Optional[int] = None
    order_slack: int = ORDER_SLACK
    tol_feas: float = TOL_FEAS
    rank_tol: float = RANK_TOL
    dedup_tol: float = DEDUP_TOL
    accept_tol: float = SDP_ACCEPT_TOL
    seed: int = SEED
    ball_radius: Optional[float] = None
    sdp: SdpOptions = field(default_factory=SdpOptions)

    def k_max(self, d0: int) -> int:
        if self.max_order is not None:
            return max(d0, self.max_order)
        return d0 + self.order_slack


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🏗️ РЕЛАКСАЦИЯ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def build_relaxation(pop: Pop, k: int) -> SdpProblem:
    """
    k-я релаксация: переменные - tms степени 2k,
    (w)_0 = 1, L_phi(w) = 0, M_k(w) >= 0, L_psi(w) >= 0.
    """
    if k < pop.d0:
        raise RelaxationOrderError(f"порядок {k} меньше d0 = {pop.d0}")
    space = pop.space
    degree = 2 * k
    nvar = basis_size(space.l, degree)
    objective = riesz_vector(pop.objective, degree)

    rows = [sp.csr_matrix(([1.0], ([0], [0])), shape=(1, nvar))]
    for phi in pop.equalities:
        distinct = localizing_operator(phi, k).distinct_rows()
        if distinct.shape[0]:
            rows.append(distinct)
    eq_matrix = sp.vstack(rows).tocsr()
    eq_rhs = np.zeros(eq_matrix.shape[0])
    eq_rhs[0] = 1.0

    moments = moment_operator(space, k)
    blocks = [LmiBlock(moments.size, moments.matrix, label=f"M_{k}")]
    for j, psi in enumerate(pop.inequalities):
        op = localizing_operator(psi, k)
        blocks.append(LmiBlock(op.size, op.matrix, label=f"psi{j + 1}"))
    logger.debug(
        f"🏗️ {pop.label or 'pop'}: k={k}, {nvar} моментов, {eq_matrix.shape[0]} равенств, "
        f"{len(blocks)} блоков"
    )
    return SdpProblem(nvar, objective, eq_matrix, eq_rhs, tuple(blocks))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔍 ПЛОСКОЕ УСЕЧЕНИЕ И ИЗВЛЕЧЕНИЕ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def numerical_rank(M: np.ndarray, rank_tol: float) -> int:
    sigma = np.linalg.svd(M, compute_uv=False)
    if sigma.size == 0 or sigma[0] <= 0:
        return 0
    return int(np.sum(sigma >= rank_tol * sigma[0]))


def flat_ranks(w: Tms, d0: int, t: int, rank_tol: float) -> tuple:
    return (
        numerical_rank(moment_matrix(w, t), rank_tol),
        numerical_rank(moment_matrix(w, t - d0), rank_tol),
    )


def flat_truncation(w: Tms, d0: int, t: int, rank_tol: float = RANK_TOL) -> bool:
    """rank M_t(w) == rank M_{t-d0}(w)"""
    if not d0 <= t <= w.order:
        raise RelaxationOrderError(f"нужно d0 <= t <= k, получено d0={d0}, t={t}, k={w.order}")
    r_t, r_low = flat_ranks(w, d0, t, rank_tol)
    logger.debug(f"🔍 ранги: M_{t} -> {r_t}, M_{t - d0} -> {r_low}")
    return r_t == r_low and r_t > 0


def _column_echelon(Vt: np.ndarray, tol: float) -> tuple:
    """rref(V^T) с выбором главного элемента; возвращает (U = rref^T, индексы опорных мономов)"""
    R = Vt.copy()
    r, p = R.shape
    pivots = []
    row = 0
    for col in range(p):
        if row == r:
            break
        best = row + int(np.argmax(np.abs(R[row:, col])))
        if abs(R[best, col]) <= tol:
            R[row:, col] = 0.0
            continue
        R[[row, best]] = R[[best, row]]
        R[row] /= R[row, col]
        others = [i for i in range(r) if i != row]
        R[others] -= np.outer(R[others, col], R[row])
        pivots.append(col)
        row += 1
    if len(pivots) < r:
        raise ExtractionError(f"найдено {len(pivots)} опорных мономов из {r}")
    return R.T, pivots


def dedup_points(points: Sequence, tol: float = DEDUP_TOL) -> list:
    """Точки совпадают, если |p - q|_inf <= tol * (1 + |p|_inf)"""
    unique = []
    for point in points:
        point = np.asarray(point, dtype=float)
        if not any(np.max(np.abs(point - q)) <= tol * (1.0 + np.max(np.abs(point))) for q in unique):
            unique.append(point)
    return unique


def first_moments(w: Tms) -> Optional[np.ndarray]:
    """Среднее представляющей меры: (w_{e_1}, ..., w_{e_l}) / w_0"""
    if w.degree < 1 or w.mass <= 0:
        return None
    l = w.space.l
    return np.array([w[tuple(int(i == j) for i in range(l))] for j in range(l)]) / w.mass


def extract_minimizers(w: Tms, t: int, rank_tol: float = RANK_TOL, seed: int = SEED) -> list:
    """Атомы из плоской M_t(w): эшелон, матрицы умножения, вещественное разложение Шура"""
    l = w.space.l
    M = moment_matrix(w, t)
    r = numerical_rank(M, rank_tol)
    if r == 0:
        raise ExtractionError("нулевая моментная матрица")
    eigvals, eigvecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(eigvals)[::-1][:r]
    V = eigvecs[:, order] * np.sqrt(np.maximum(eigvals[order], 0.0))

    U, pivots = _column_echelon(V.T, rank_tol * max(1.0, np.max(np.abs(V))))
    basis = monomial_basis(l, t)
    index = basis_index(l, t)
    pivot_monos = [basis[i] for i in pivots]
    if any(sum(mono) > t - 1 for mono in pivot_monos):
        raise ExtractionError(f"опорный моном степени > {t - 1}")

    multipliers = []
    for var in range(l):
        N = np.zeros((r, r))
        for j, mono in enumerate(pivot_monos):
            shifted = tuple(e + (1 if i == var else 0) for i, e in enumerate(mono))
            N[j, :] = U[index[shifted], :]
        multipliers.append(N)

    rng = np.random.default_rng(seed)
    weights = rng.random(l)
    weights /= weights.sum()
    combo = sum(c * N for c, N in zip(weights, multipliers))
    T, Q = sla.schur(combo, output="real")
    scale = max(1.0, np.max(np.abs(T)))
    if r > 1 and np.any(np.abs(np.diag(T, -1)) > 1e-8 * scale):
        raise ExtractionError("комплексные собственные значения в матрице умножения")

    points = []
    for j in range(r):
        q = Q[:, j]
        points.append(np.array([q @ N @ q for N in multipliers]))
    logger.debug(f"🔍 извлечено {len(points)} атомов при t={t}")
    return dedup_points(points)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# ✅ ПРОВЕРКА ТОЧЕК
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _allowance(poly: Polynomial, point: np.ndarray, tol: float) -> float:
    reach = max(1.0, float(np.max(np.abs(point)))) ** poly.degree
    return tol * (1.0 + poly.norm1() * reach)


def is_feasible(pop: Pop, point: Sequence[float], tol: float = TOL_FEAS) -> bool:
    point = np.asarray(point, dtype=float)
    for phi in pop.equalities:
        if abs(phi.evaluate(point)) > _allowance(phi, point, tol):
            return False
    for psi in pop.inequalities:
        if psi.evaluate(point) < -_allowance(psi, point, tol):
            return False
    return True


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔁 ЦИКЛ ПО ПОРЯДКАМ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


class PopSolver:
    """Цикл k = d0 ... k_max с проверкой плоского усечения"""

    def __init__(self, options: Optional[PopOptions] = None):
        self.options = options or PopOptions()

    def solve(self, pop: Pop) -> PopResult:
        opts = self.options
        pop = pop.with_ball(opts.ball_radius)
        d0 = pop.d0
        k_max = opts.k_max(d0)
        name = pop.label or "pop"
        bounds = []
        iterations = 0

        for k in range(d0, k_max + 1):
            solution = solve_sdp(build_relaxation(pop, k), opts.sdp)
            iterations += solution.iterations

            if solution.status is SdpStatus.PRIMAL_INFEASIBLE:
                logger.info(f"✅ {name}: релаксация порядка {k} несовместна")
                return PopResult(PopStatus.INFEASIBLE, order=k, lower_bounds=tuple(bounds),
                                 certificate=solution.certificate, sdp_iterations=iterations,
                                 message=f"несовместна при k={k}")
            if solution.status is SdpStatus.DUAL_INFEASIBLE:
                logger.info(f"📉 {name}: релаксация порядка {k} неограничена снизу")
                bounds.append((k, -np.inf))
                continue
            if solution.status is SdpStatus.STALLED:
                if solution.x is None or not solution.residuals.within(opts.accept_tol):
                    logger.warning(f"⚠️ {name}: SDP остановился при k={k}: {solution.message}")
                    return PopResult(PopStatus.INCONCLUSIVE, order=k, lower_bounds=tuple(bounds),
                                     sdp_iterations=iterations,
                                     message=f"SDP остановился при k={k}: {solution.message}")
                logger.warning(f"⚠️ {name}: k={k}, неточное решение SDP принято для извлечения")

            value = float(solution.objective)
            if bounds and np.isfinite(bounds[-1][1]) and value < bounds[-1][1] - 1e-6 * (1 + abs(value)):
                logger.warning(f"⚠️ {name}: нижняя граница уменьшилась {bounds[-1][1]:.6g} -> {value:.6g}")
            bounds.append((k, value))
            logger.info(f"📐 {name}: k={k}, F_k = {value:.8g}")

            w = Tms(pop.space, 2 * k, solution.x)
            for t in range(d0, k + 1):
                if not flat_truncation(w, d0, t, opts.rank_tol):
                    continue
                rank = numerical_rank(moment_matrix(w, t), opts.rank_tol)
                try:
                    candidates = extract_minimizers(w, t, opts.rank_tol, opts.seed)
                except ExtractionError as e:
                    logger.warning(f"⚠️ {name}: извлечение при t={t} не удалось: {e}")
                    continue
                points = self._verified(pop, candidates, value)
                if points:
                    logger.info(
                        f"✅ {name}: {len(points)} минимизатор(ов) при k={k}, t={t}, rank={rank}: "
                        f"{[np.round(p, 4).tolist() for p in points]}"
                    )
                    return PopResult(PopStatus.OPTIMAL, tuple(points), value, k, t, rank, tuple(bounds),
                                     sdp_iterations=iterations, message="плоское усечение")

            # F_k <= f* <= f(p): допустимая p с f(p) = F_k - глобальный минимизатор
            mean = first_moments(w)
            if mean is not None and self._verified(pop, [mean], value, quiet=True):
                logger.info(
                    f"✅ {name}: k={k}, плоского усечения нет, точка первых моментов "
                    f"{np.round(mean, 4).tolist()} достигает F_k"
                )
                return PopResult(PopStatus.OPTIMAL, (mean,), value, k, 0, 0, tuple(bounds),
                                 sdp_iterations=iterations, message="точка первых моментов")

        logger.warning(f"⚠️ {name}: плоское усечение не достигнуто до k={k_max}")
        return PopResult(PopStatus.INCONCLUSIVE, order=k_max, lower_bounds=tuple(bounds),
                         sdp_iterations=iterations, message=f"нет плоского усечения до k={k_max}")

    def _verified(self, pop: Pop, candidates: list, value: float, quiet: bool = False) -> list:
        report = logger.debug if quiet else logger.warning
        kept = []
        for point in candidates:
            if not is_feasible(pop, point, self.options.tol_feas):
                report(f"⚠️ точка {np.round(point, 6).tolist()} недопустима, отброшена")
                continue
            if abs(pop.objective.evaluate(point) - value) > OBJECTIVE_MATCH * (1.0 + abs(value)):
                report(f"⚠️ точка {np.round(point, 6).tolist()}: f(p) не совпадает с F_k, отброшена")
                continue
            kept.append(point)
        return kept


def solve_pop(pop: Pop, opts: Optional[PopOptions] = None) -> PopResult:
    return PopSolver(opts).solve(pop)
