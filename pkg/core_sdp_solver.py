#!/usr/bin/env python3
"""
🧮 SDP SOLVER - прямо-двойственный метод внутренней точки

Задача:
    min  c^T x   при  B x = b,   S_j = C_j + sum_i x_i A_ij  >= 0  (по блокам)
Двойственная:
    max  -<C, Z> - b^T y   при  A*(Z) = c + B^T y,  Z >= 0

Равенства исключаются подстановкой x = x0 + N w, затем решается
однородное самодвойственное вложение (tau, kappa) с масштабированием
Нестерова-Тодда и предиктор-корректором Мехротры.
Вырожденность не бросает исключений: статус STALLED с диагностикой.
Сертификаты несовместности перепроверяются отдельной процедурой.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from config import SDP_CERT_TOL, SDP_MAX_ITERS, SDP_PRESOLVE_TOL, SDP_STEP, SDP_TOL
from logger import get_logger

logger = get_logger(__name__)

# Подряд идущих коротких шагов до остановки
MAX_SHORT_STEPS = 5
SHORT_STEP = 1e-8
# Итеративное уточнение решения системы KKT
MAX_REFINE = 4
REFINE_TOL = 1e-12


class SdpProblemError(ValueError):
    """Некорректно собранная задача SDP"""


class InconsistentEqualitiesError(ValueError):
    """Система B x = b несовместна; ray: y с B^T y = 0, b^T y = -1"""

    def __init__(self, message: str, ray: np.ndarray):
        super().__init__(message)
        self.ray = ray


class _Breakdown(RuntimeError):
    pass


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    STALLED = "stalled"


@dataclass(frozen=True)
class SdpOptions:
    tol: float = SDP_TOL
    cert_tol: float = SDP_CERT_TOL
    max_iters: int = SDP_MAX_ITERS
    step: float = SDP_STEP
    presolve_tol: float = SDP_PRESOLVE_TOL

    def __post_init__(self):
        if self.tol <= 0 or self.cert_tol <= 0:
            raise SdpProblemError("допуски должны быть положительны")
        if self.max_iters < 1:
            raise SdpProblemError(f"max_iters должно быть >= 1, получено {self.max_iters}")
        if not 0.0 < self.step < 1.0:
            raise SdpProblemError(f"step должен лежать в (0, 1), получено {self.step}")


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📦 ЗАДАЧА И РЕШЕНИЕ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


@dataclass(frozen=True)
class LmiBlock:
    """Блок S = C + mat(V x): V - разреженная (size^2 x nvar)"""

    size: int
    operator: sp.csr_matrix
    constant: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        operator = sp.csr_matrix(self.operator, dtype=float)
        if operator.shape[0] != self.size * self.size:
            raise SdpProblemError(
                f"блок {self.label}: строк оператора {operator.shape[0]} != {self.size}^2"
            )
        constant = np.zeros((self.size, self.size)) if self.constant is None else np.asarray(self.constant, dtype=float)
        if constant.shape != (self.size, self.size):
            raise SdpProblemError(f"блок {self.label}: константа формы {constant.shape}")
        if not np.allclose(constant, constant.T, atol=1e-12):
            raise SdpProblemError(f"блок {self.label}: константа несимметрична")
        object.__setattr__(self, "operator", operator)
        object.__setattr__(self, "constant", constant)

    @property
    def nvar(self) -> int:
        return self.operator.shape[1]

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.constant + (self.operator @ x).reshape(self.size, self.size)

    def adjoint(self, Z: np.ndarray) -> np.ndarray:
        return self.operator.T @ np.asarray(Z).ravel()


@dataclass(frozen=True)
class SdpProblem:
    nvar: int
    objective: np.ndarray
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    blocks: tuple = ()

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float).ravel()
        eq_matrix = sp.csr_matrix(self.eq_matrix, dtype=float)
        eq_rhs = np.asarray(self.eq_rhs, dtype=float).ravel()
        if objective.shape[0] != self.nvar:
            raise SdpProblemError(f"длина c = {objective.shape[0]} != nvar = {self.nvar}")
        if eq_matrix.shape[1] != self.nvar or eq_matrix.shape[0] != eq_rhs.shape[0]:
            raise SdpProblemError(f"B формы {eq_matrix.shape} не согласована с b длины {eq_rhs.shape[0]}")
        for block in self.blocks:
            if block.nvar != self.nvar:
                raise SdpProblemError(f"блок {block.label}: {block.nvar} столбцов вместо {self.nvar}")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "eq_matrix", eq_matrix)
        object.__setattr__(self, "eq_rhs", eq_rhs)
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n_equalities(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def block_sizes(self) -> tuple:
        return tuple(block.size for block in self.blocks)

    def slacks(self, x: np.ndarray) -> list:
        return [block.value(x) for block in self.blocks]

    def adjoint(self, Zs) -> np.ndarray:
        total = np.zeros(self.nvar)
        for block, Z in zip(self.blocks, Zs):
            total += block.adjoint(Z)
        return total


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """
    kind="primal": y, z с A*(Z) = B^T y, Z >= 0, <C, Z> + b^T y = -1
    kind="dual":   x с B x = 0, A(x) >= 0, c^T x = -1
    """

    kind: str
    y: Optional[np.ndarray] = None
    z: tuple = ()
    x: Optional[np.ndarray] = None
    violation: float = 0.0


@dataclass(frozen=True)
class SdpResiduals:
    primal: float = np.inf
    dual: float = np.inf
    gap: float = np.inf

    def within(self, tol: float) -> bool:
        return max(self.primal, self.dual, self.gap) <= tol


@dataclass(frozen=True)
class SdpSolution:
    status: SdpStatus
    x: Optional[np.ndarray] = None
    objective: float = np.nan
    dual_objective: float = np.nan
    y: Optional[np.ndarray] = None
    z: tuple = ()
    certificate: Optional[InfeasibilityCertificate] = None
    residuals: SdpResiduals = field(default_factory=SdpResiduals)
    iterations: int = 0
    message: str = ""


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🧹 PRESOLVE
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _independent_rows(B: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Индексы линейно независимых строк; проверка совместности по МНК"""
    m = B.shape[0]
    if m == 0:
        return np.zeros(0, dtype=int)
    scale = np.linalg.norm(B, 2) if B.size else 0.0
    if scale == 0.0:
        rank = 0
        piv = np.arange(m)
    else:
        _, R, piv = sla.qr(B.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > tol * scale))
    keep = np.sort(piv[:rank])

    if rank:
        solution, *_ = np.linalg.lstsq(B, b, rcond=None)
        residual = b - B @ solution
    else:
        residual = b.copy()
    if np.linalg.norm(residual) > 1e3 * tol * (1.0 + np.linalg.norm(b)):
        ray = -residual / float(residual @ residual)
        raise InconsistentEqualitiesError(
            f"система равенств несовместна (невязка {np.linalg.norm(residual):.2e})", ray
        )
    return keep


def presolve(prob: SdpProblem, tol: float = SDP_PRESOLVE_TOL) -> SdpProblem:
    """Убрать численно зависимые строки B (rank-revealing QR, порог tol * ||B||)"""
    B = prob.eq_matrix.toarray()
    keep = _independent_rows(B, prob.eq_rhs, tol)
    if keep.shape[0] == prob.n_equalities:
        return prob
    logger.debug(f"🧹 presolve: {prob.n_equalities} -> {keep.shape[0]} равенств")
    return SdpProblem(prob.nvar, prob.objective, prob.eq_matrix[keep, :], prob.eq_rhs[keep], prob.blocks)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# ✅ ПРОВЕРКА СЕРТИФИКАТОВ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _coefficient_matrices(block: LmiBlock):
    """A_i блока по одному, как плотные матрицы"""
    csc = block.operator.tocsc()
    for i in range(block.nvar):
        A = np.zeros(block.size * block.size)
        start, end = csc.indptr[i], csc.indptr[i + 1]
        A[csc.indices[start:end]] = csc.data[start:end]
        yield A.reshape(block.size, block.size)


def verify_certificate(prob: SdpProblem, cert: InfeasibilityCertificate, tol: float = SDP_CERT_TOL) -> bool:
    """Независимая проверка луча через явные матрицы A_i (без разреженного сопряжения)"""
    if cert.kind == "primal":
        y = np.zeros(prob.n_equalities) if cert.y is None else np.asarray(cert.y, dtype=float)
        z = cert.z or tuple(np.zeros((blk.size, blk.size)) for blk in prob.blocks)
        value = float(prob.eq_rhs @ y) + sum(float(np.sum(blk.constant * Z)) for blk, Z in zip(prob.blocks, z))
        if value >= 0:
            return False
        norm = -value
        adj = np.zeros(prob.nvar)
        for blk, Z in zip(prob.blocks, z):
            Zs = 0.5 * (Z + Z.T) / norm
            eigs = np.linalg.eigvalsh(Zs) if blk.size else np.zeros(0)
            if eigs.size and eigs.min() < -tol * max(1.0, np.abs(eigs).max()):
                return False
            for i, A in enumerate(_coefficient_matrices(blk)):
                adj[i] += float(np.sum(A * Zs))
        mismatch = np.linalg.norm(prob.eq_matrix.T @ (y / norm) - adj)
        return bool(mismatch <= 10 * tol * max(1.0, np.linalg.norm(prob.objective)))

    if cert.kind == "dual":
        x = np.asarray(cert.x, dtype=float)
        cx = float(prob.objective @ x)
        if cx >= 0:
            return False
        x = x / -cx
        scale = max(1.0, np.linalg.norm(prob.eq_rhs), max((np.linalg.norm(b.constant) for b in prob.blocks), default=0.0))
        if prob.n_equalities and np.linalg.norm(prob.eq_matrix @ x) > 10 * tol * scale:
            return False
        for blk in prob.blocks:
            direction = sum((xi * A for xi, A in zip(x, _coefficient_matrices(blk))), np.zeros((blk.size, blk.size)))
            if blk.size and np.linalg.eigvalsh(0.5 * (direction + direction.T)).min() < -10 * tol * scale:
                return False
        return True
    return False


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔁 ВНУТРЕННЯЯ ТОЧКА
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def equality_nullspace(B: np.ndarray, b: np.ndarray):
    """
    Параметризация {x : B x = b} = x0 + range(N), столбцы N ортонормированы.

    Строки B должны быть линейно независимы (после presolve).
    N = None означает отсутствие равенств (N = I).
    """
    m, n = B.shape
    if m == 0:
        return np.zeros(n), None
    Q, R = sla.qr(B.T)
    x0 = Q[:, :m] @ sla.solve_triangular(R[:m, :m], b, trans="T")
    return x0, Q[:, m:]


@dataclass
class _Scaling:
    R: np.ndarray
    Rinv: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    lam: np.ndarray


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """L с M = L L^T (через собственные числа, с отсечкой снизу)"""
    w, U = np.linalg.eigh(_sym(M))
    floor = max(w.max(), 1e-300) * 1e-15
    return U * np.sqrt(np.maximum(w, floor))


def _nt_scaling(S: np.ndarray, Z: np.ndarray) -> _Scaling:
    Ls = _psd_factor(S)
    Lz = _psd_factor(Z)
    U, lam, Vt = np.linalg.svd(Lz.T @ Ls)
    lam = np.maximum(lam, 1e-300)
    isq = 1.0 / np.sqrt(lam)
    R = (Ls @ Vt.T) * isq[None, :]
    Rinv = (U.T @ Lz.T) * isq[:, None]
    return _Scaling(R, Rinv, R @ R.T, Rinv.T @ Rinv, lam)


def _jordan(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return 0.5 * (X @ Y + Y @ X)


def _lambda_solve(lam: np.ndarray, T: np.ndarray) -> np.ndarray:
    """X с lam o X = T для диагональной lam"""
    return 2.0 * T / (lam[:, None] + lam[None, :])


class _SchurFactor:
    """Холецкий для H; при неудаче спектральное разложение с отсечкой"""

    def __init__(self, H: np.ndarray):
        self.chol = None
        try:
            self.chol = sla.cho_factor(H, lower=True)
            return
        except np.linalg.LinAlgError:
            pass
        w, U = np.linalg.eigh(H)
        if not np.all(np.isfinite(w)) or w.size == 0 or w.max() <= 0:
            raise _Breakdown("матрица Шура не положительна")
        floor = w.max() * 1e-14
        self.U = U
        self.winv = 1.0 / np.maximum(w, floor)
        logger.debug(f"🔍 Холецкий не прошёл, cond(H) ~ {w.max() / max(w.min(), 1e-300):.1e}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.chol is not None:
            return sla.cho_solve(self.chol, rhs)
        return self.U @ (self.winv * (self.U.T @ rhs))


class _HomogeneousSolver:
    """
    Итерации однородного самодвойственного вложения.

    Равенства исключены заранее: x = x0 + N w, блоки S = C' + A(N w)
    с C' = C + A(x0). Переменные метода: w, S, Z, tau, kappa.
    """

    def __init__(self, prob: SdpProblem, x0: np.ndarray, N: Optional[np.ndarray], opts: SdpOptions):
        self.prob = prob
        self.opts = opts
        self.x0 = x0
        self.N = N
        self.c0 = float(prob.objective @ x0)
        self.c = prob.objective if N is None else N.T @ prob.objective
        self.C = [blk.value(x0) for blk in prob.blocks]
        self.V = [blk.operator for blk in prob.blocks]
        self.Vt = [blk.operator.T.tocsr() for blk in prob.blocks]
        self.Vc = [blk.operator.tocsc() for blk in prob.blocks]
        self.sizes = [blk.size for blk in prob.blocks]
        self.degree = sum(self.sizes) + 1
        self.norm_c = np.linalg.norm(self.c)
        self.norm_C = np.sqrt(sum(np.sum(C * C) for C in self.C))

    @property
    def nvar(self) -> int:
        return self.prob.nvar if self.N is None else self.N.shape[1]

    # ── линейные отображения ──────────────────────────────────────────

    def lift(self, w: np.ndarray) -> np.ndarray:
        return w if self.N is None else self.N @ w

    def A(self, w: np.ndarray) -> list:
        x = self.lift(w)
        return [(V @ x).reshape(p, p) for V, p in zip(self.V, self.sizes)]

    def A_adj(self, Zs) -> np.ndarray:
        total = np.zeros(self.prob.nvar)
        for Vt, Z in zip(self.Vt, Zs):
            total += Vt @ Z.ravel()
        return total if self.N is None else self.N.T @ total

    @staticmethod
    def inner(Xs, Ys) -> float:
        return float(sum(np.sum(X * Y) for X, Y in zip(Xs, Ys)))

    # ── KKT ───────────────────────────────────────────────────────────

    def factor(self, scalings: list) -> None:
        n = self.prob.nvar
        H = np.zeros((n, n))
        for Vc, Vt, p, sc in zip(self.Vc, self.Vt, self.sizes, scalings):
            Q = sc.Q
            for j in range(n):
                start, end = Vc.indptr[j], Vc.indptr[j + 1]
                if start == end:
                    continue
                r, c = np.divmod(Vc.indices[start:end], p)
                T = (Q[:, r] * Vc.data[start:end]) @ Q[c, :]
                H[:, j] += Vt @ T.ravel()
        if self.N is not None:
            H = self.N.T @ H @ self.N
        self.H = _SchurFactor(_sym(H))
        self.scalings = scalings

    def _kkt_once(self, bx, bz):
        Q = [sc.Q for sc in self.scalings]
        ux = self.H.solve(bx - self.A_adj([q @ z @ q for q, z in zip(Q, bz)]))
        uz = [_sym(q @ (-a - z) @ q) for q, a, z in zip(Q, self.A(ux), bz)]
        return ux, uz

    def solve_kkt(self, bx, bz):
        """-A*(uz) = bx,  -A(ux) - P uz P = bz; уточнение до невязки REFINE_TOL"""
        ux, uz = self._kkt_once(bx, bz)
        P = [sc.P for sc in self.scalings]
        scale = 1.0 + np.linalg.norm(bx) + sum(np.linalg.norm(z) for z in bz)
        for _ in range(MAX_REFINE):
            e1 = bx + self.A_adj(uz)
            e3 = [z + a + p @ u @ p for z, a, p, u in zip(bz, self.A(ux), P, uz)]
            error = np.linalg.norm(e1) + sum(np.linalg.norm(e) for e in e3)
            if not np.isfinite(error):
                raise _Breakdown("невязка KKT не конечна")
            if error <= REFINE_TOL * scale:
                break
            dx, dz = self._kkt_once(e1, e3)
            ux = ux + dx
            uz = [u + d for u, d in zip(uz, dz)]
        return ux, uz

    # ── итерации ──────────────────────────────────────────────────────

    def run(self) -> SdpSolution:
        opts = self.opts
        w = np.zeros(self.nvar)
        S = [np.eye(p) for p in self.sizes]
        Z = [np.eye(p) for p in self.sizes]
        tau, kappa = 1.0, 1.0
        short_steps = 0
        best = None

        for it in range(opts.max_iters + 1):
            Aw = self.A(w)
            r1 = -self.A_adj(Z) + self.c * tau
            r3 = [s - a - C * tau for s, a, C in zip(S, Aw, self.C)]
            hz = self.inner(self.C, Z)
            r4 = kappa + self.c @ w + hz
            mu = (self.inner(S, Z) + tau * kappa) / self.degree

            residuals, pobj, dobj = self._measure(w, S, Z, tau, Aw)
            logger.debug(
                f"🔍 it={it} pres={residuals.primal:.2e} dres={residuals.dual:.2e} "
                f"gap={residuals.gap:.2e} tau={tau:.2e} kappa={kappa:.2e}"
            )
            if residuals.within(opts.tol):
                return self._solution(SdpStatus.OPTIMAL, w, Z, tau, residuals, pobj, dobj, it, "сходимость")
            score = max(residuals.primal, residuals.dual, residuals.gap)
            if best is None or score < best[0]:
                best = (score, w, Z, tau, residuals, pobj, dobj)
            cert = self._infeasibility(w, Z, S, tau, kappa, Aw, hz)
            if cert is not None:
                status = SdpStatus.PRIMAL_INFEASIBLE if cert.kind == "primal" else SdpStatus.DUAL_INFEASIBLE
                return SdpSolution(status, certificate=cert, residuals=residuals, iterations=it,
                                   message=f"сертификат ({cert.kind}) на итерации {it}")
            if it == opts.max_iters:
                break

            try:
                scalings = [_nt_scaling(s, z) for s, z in zip(S, Z)]
                self.factor(scalings)
                x1, z1 = self.solve_kkt(-self.c, [C.copy() for C in self.C])
                den = self.c @ x1 + self.inner(self.C, z1) - kappa / tau
                if abs(den) < 1e-300:
                    raise _Breakdown("вырожденный знаменатель для dtau")

                def direction(f, rs, rk):
                    bz = [-f * r - sc.R @ q @ sc.R.T for r, sc, q in zip(r3, scalings, rs)]
                    x2, z2 = self.solve_kkt(-f * r1, bz)
                    num = -f * r4 - rk / tau - (self.c @ x2 + self.inner(self.C, z2))
                    dtau = num / den
                    dw = x2 + dtau * x1
                    dz = [a + dtau * b for a, b in zip(z2, z1)]
                    # dS из линейного уравнения: невязка блоков падает ровно в (1 - alpha f) раз
                    ds = [a + C * dtau - f * r for a, C, r in zip(self.A(dw), self.C, r3)]
                    dkappa = (rk - kappa * dtau) / tau
                    return dw, [_sym(d) for d in ds], dz, dtau, dkappa

                # предиктор
                rs_aff = [-np.diag(sc.lam) for sc in scalings]
                dwa, dsa, dza, dta, dka = direction(1.0, rs_aff, -tau * kappa)
                alpha_aff = min(1.0, self._max_step(scalings, dsa, dza, tau, kappa, dta, dka))
                sigma = (1.0 - alpha_aff) ** 3

                # корректор
                rs = []
                for sc, ds_, dz_ in zip(scalings, dsa, dza):
                    Ds = sc.Rinv @ ds_ @ sc.Rinv.T
                    Dz = sc.R.T @ dz_ @ sc.R
                    target = sigma * mu * np.eye(len(sc.lam)) - np.diag(sc.lam ** 2) - _jordan(Ds, Dz)
                    rs.append(_lambda_solve(sc.lam, target))
                rk = -tau * kappa + sigma * mu - dta * dka
                dw, ds, dz, dtau, dkappa = direction(1.0 - sigma, rs, rk)
                alpha = min(1.0, opts.step * self._max_step(scalings, ds, dz, tau, kappa, dtau, dkappa))
            except (_Breakdown, np.linalg.LinAlgError, ValueError) as e:
                logger.warning(f"⚠️ SDP: численный срыв на итерации {it}: {e}")
                return self._stalled(best, it, f"численный срыв: {e}")

            w = w + alpha * dw
            S = [_sym(s + alpha * d) for s, d in zip(S, ds)]
            Z = [_sym(z + alpha * d) for z, d in zip(Z, dz)]
            tau = tau + alpha * dtau
            kappa = kappa + alpha * dkappa

            short_steps = short_steps + 1 if alpha < SHORT_STEP else 0
            if short_steps >= MAX_SHORT_STEPS or tau <= 0 or kappa < 0:
                return self._stalled(best, it + 1, "слишком короткие шаги")

        return self._stalled(best, opts.max_iters, "исчерпан лимит итераций")

    def _measure(self, w, S, Z, tau, Aw):
        pres = np.sqrt(sum(np.sum((s / tau - a / tau - C) ** 2) for s, a, C in zip(S, Aw, self.C)))
        pres /= 1.0 + self.norm_C
        dres = np.linalg.norm(self.A_adj(Z) / tau - self.c) / (1.0 + self.norm_c)
        pobj = float(self.c @ w) / tau + self.c0
        dobj = -self.inner(self.C, Z) / tau + self.c0
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return SdpResiduals(float(pres), float(dres), float(gap)), pobj, dobj

    def _infeasibility(self, w, Z, S, tau, kappa, Aw, hz) -> Optional[InfeasibilityCertificate]:
        if tau > kappa:
            return None
        tol = self.opts.cert_tol
        if hz < 0:
            mismatch = np.linalg.norm(self.A_adj(Z)) / max(1.0, self.norm_c)
            if mismatch / -hz <= tol:
                return InfeasibilityCertificate(
                    "primal", None, tuple(z / -hz for z in Z), violation=float(mismatch / -hz)
                )
        cw = float(self.c @ w)
        if cw < 0:
            lmi = np.sqrt(sum(np.sum((s - a) ** 2) for s, a in zip(S, Aw)))
            mismatch = lmi / max(1.0, self.norm_C)
            if mismatch / -cw <= tol:
                return InfeasibilityCertificate("dual", x=self.lift(w) / -cw, violation=float(mismatch / -cw))
        return None

    def _max_step(self, scalings, ds, dz, tau, kappa, dtau, dkappa) -> float:
        alpha = np.inf
        for sc, dsb, dzb in zip(scalings, ds, dz):
            isq = 1.0 / np.sqrt(sc.lam)
            for D in (sc.Rinv @ dsb @ sc.Rinv.T, sc.R.T @ dzb @ sc.R):
                M = _sym(isq[:, None] * D * isq[None, :])
                emin = np.linalg.eigvalsh(M).min()
                if emin < 0:
                    alpha = min(alpha, -1.0 / emin)
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        return float(alpha)

    def _solution(self, status, w, Z, tau, residuals, pobj, dobj, it, message) -> SdpSolution:
        x = self.x0 + self.lift(w / tau)
        return SdpSolution(
            status, x, pobj, dobj, None, tuple(z / tau for z in Z),
            residuals=residuals, iterations=it, message=message,
        )

    def _stalled(self, best, it, message) -> SdpSolution:
        """Остановка: возвращается итерат с наименьшей невязкой"""
        _, w, Z, tau, residuals, pobj, dobj = best
        return self._solution(SdpStatus.STALLED, w, Z, max(tau, 1e-300), residuals, pobj, dobj, it, message)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🚀 ТОЧКА ВХОДА
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _solve_fixed_point(prob: SdpProblem, x0: np.ndarray, cert_tol: float) -> SdpSolution:
    """Равенства определяют x однозначно: допустимость сводится к C + A(x0) >= 0"""
    zs = []
    worst = (np.inf, None, None)
    for j, blk in enumerate(prob.blocks):
        w, U = np.linalg.eigh(_sym(blk.value(x0)))
        zs.append(np.zeros((blk.size, blk.size)))
        if w.size and w[0] < worst[0]:
            worst = (w[0], j, U[:, 0])
    if worst[1] is not None and worst[0] < -cert_tol:
        value, j, v = worst
        zs[j] = np.outer(v, v) / -value
        cert = InfeasibilityCertificate("primal", None, tuple(zs))
        return SdpSolution(SdpStatus.PRIMAL_INFEASIBLE, certificate=cert, message="фиксированная точка вне конуса")
    value = float(prob.objective @ x0)
    return SdpSolution(SdpStatus.OPTIMAL, x0, value, value, None, tuple(zs),
                       residuals=SdpResiduals(0.0, 0.0, 0.0), message="x фиксирован равенствами")


def _multipliers(prob: SdpProblem, zs, shift: np.ndarray) -> np.ndarray:
    """y по МНК из B^T y = A*(Z) - shift"""
    if prob.n_equalities == 0:
        return np.zeros(0)
    rhs = prob.adjoint(zs) - shift
    y, *_ = np.linalg.lstsq(prob.eq_matrix.T.toarray(), rhs, rcond=None)
    return y


def solve_sdp(prob: SdpProblem, opts: Optional[SdpOptions] = None) -> SdpSolution:
    """
    Решить SDP.

    Нулевые столбцы (не входят ни в блоки, ни в B) фиксируются в 0;
    если при этом c_i != 0 и остальная задача допустима, задача
    неограничена (DUAL_INFEASIBLE с лучом -e_i / c_i).
    Зависимые равенства убирает presolve, оставшиеся исключаются
    подстановкой x = x0 + N w.
    """
    opts = opts or SdpOptions()
    n = prob.nvar
    used = np.zeros(n, dtype=bool)
    for blk in prob.blocks:
        used |= np.diff(blk.operator.tocsc().indptr) > 0
    used |= np.diff(prob.eq_matrix.tocsc().indptr) > 0
    keep_cols = np.flatnonzero(used)
    free_dirs = [i for i in np.flatnonzero(~used) if prob.objective[i] != 0.0]

    reduced = SdpProblem(
        len(keep_cols), prob.objective[keep_cols], prob.eq_matrix[:, keep_cols], prob.eq_rhs,
        tuple(LmiBlock(blk.size, blk.operator[:, keep_cols], blk.constant, blk.label) for blk in prob.blocks),
    )
    try:
        reduced = presolve(reduced, opts.presolve_tol)
    except InconsistentEqualitiesError as e:
        logger.info(f"✅ SDP: {e}")
        cert = InfeasibilityCertificate(
            "primal", e.ray, tuple(np.zeros((blk.size, blk.size)) for blk in prob.blocks)
        )
        if not verify_certificate(prob, cert, opts.cert_tol):
            return SdpSolution(SdpStatus.STALLED, message=f"луч несовместности не подтверждён: {e}")
        return SdpSolution(SdpStatus.PRIMAL_INFEASIBLE, certificate=cert, message=str(e))

    x0, N = equality_nullspace(reduced.eq_matrix.toarray(), reduced.eq_rhs)
    logger.debug(
        f"🧮 SDP: {reduced.nvar} переменных, {reduced.n_equalities} равенств, блоки {reduced.block_sizes}"
    )
    if reduced.nvar == 0 or (N is not None and N.shape[1] == 0):
        inner = _solve_fixed_point(reduced, x0, opts.cert_tol)
    else:
        inner = _HomogeneousSolver(reduced, x0, N, opts).run()

    def expand_x(xr):
        if xr is None:
            return None
        full = np.zeros(n)
        full[keep_cols] = xr
        return full

    cert = inner.certificate
    if cert is not None:
        y = _multipliers(prob, cert.z, np.zeros(n)) if cert.kind == "primal" else None
        cert = InfeasibilityCertificate(cert.kind, y, cert.z, expand_x(cert.x), cert.violation)
        if not verify_certificate(prob, cert, opts.cert_tol):
            logger.warning("⚠️ SDP: сертификат не прошёл независимую проверку")
            return SdpSolution(SdpStatus.STALLED, residuals=inner.residuals, iterations=inner.iterations,
                               message="сертификат не подтверждён")

    if inner.status is SdpStatus.OPTIMAL and free_dirs:
        i = free_dirs[0]
        ray = np.zeros(n)
        ray[i] = -1.0 / prob.objective[i]
        cert = InfeasibilityCertificate("dual", x=ray)
        logger.info(f"✅ SDP: неограничена по свободной переменной #{i}")
        return SdpSolution(SdpStatus.DUAL_INFEASIBLE, certificate=cert, iterations=inner.iterations,
                           message="свободная переменная с ненулевой стоимостью")

    y = _multipliers(prob, inner.z, prob.objective) if inner.x is not None else None
    solution = SdpSolution(
        inner.status, expand_x(inner.x), inner.objective, inner.dual_objective, y,
        inner.z, cert, inner.residuals, inner.iterations, inner.message,
    )
    emoji = "✅" if solution.status is not SdpStatus.STALLED else "⚠️"
    logger.info(f"{emoji} SDP: {solution.status.value} за {solution.iterations} итераций ({solution.message})")
    return solution
