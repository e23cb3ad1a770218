#!/usr/bin/env python3
"""
📊 MOMENT TOOLKIT - усечённые мульти-последовательности и локализующие матрицы

Вектор моментов w индексирован градуированно-лексикографическим базисом
мономов степени <= 2k. Локализующая матрица L_q^(k)(w) хранится как
разреженный линейный оператор: строка (i, j) векторизации содержит
коэффициенты при w_alpha, так что L_q(w) = sum_alpha w_alpha * A_alpha.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from core_polynomial import Polynomial, VarSpace, grlex_key
from logger import get_logger

logger = get_logger(__name__)


class MomentDegreeError(ValueError):
    """Степень многочлена не помещается в порядок релаксации"""


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🔢 БАЗИС МОНОМОВ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


@lru_cache(maxsize=64)
def monomial_basis(l: int, d: int) -> tuple:
    """Все мономы степени <= d от l переменных, grlex: [1, z1, z2, z1^2, z1z2, z2^2, ...]"""
    if l < 1 or d < 0:
        raise MomentDegreeError(f"некорректные l={l}, d={d}")
    monos = []
    for degree in range(d + 1):
        for combo in combinations_with_replacement(range(l), degree):
            exps = [0] * l
            for i in combo:
                exps[i] += 1
            monos.append(tuple(exps))
    monos.sort(key=grlex_key)
    return tuple(monos)


@lru_cache(maxsize=64)
def basis_index(l: int, d: int) -> dict:
    return {mono: i for i, mono in enumerate(monomial_basis(l, d))}


def basis_size(l: int, d: int) -> int:
    return math.comb(l + d, d)


def localizing_order(q: Polynomial, k: int) -> int:
    """s = k - ceil(deg q / 2): степень строк L_q^(k)"""
    return k - (q.degree + 1) // 2


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📦 TMS
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


@dataclass(frozen=True)
class Tms:
    """Усечённая мульти-последовательность степени degree"""

    space: VarSpace
    degree: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        expected = basis_size(self.space.l, self.degree)
        if values.shape[0] != expected:
            raise MomentDegreeError(f"длина tms {values.shape[0]} != C(l+d, d) = {expected}")
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return self.degree // 2

    @property
    def mass(self) -> float:
        return float(self.values[0])

    def __getitem__(self, mono) -> float:
        return float(self.values[basis_index(self.space.l, self.degree)[tuple(mono)]])

    def truncate(self, degree: int) -> "Tms":
        if degree > self.degree:
            raise MomentDegreeError(f"нельзя усечь tms степени {self.degree} до {degree}")
        return Tms(self.space, degree, self.values[: basis_size(self.space.l, degree)])

    def __add__(self, other: "Tms") -> "Tms":
        if other.space != self.space or other.degree != self.degree:
            raise MomentDegreeError("tms разных пространств или степеней")
        return Tms(self.space, self.degree, self.values + other.values)

    def scale(self, factor: float) -> "Tms":
        return Tms(self.space, self.degree, factor * self.values)


def dirac_tms(point: Sequence[float], degree: int, space: Optional[VarSpace] = None) -> Tms:
    """Моменты меры Дирака в точке: w_alpha = point^alpha"""
    point = np.asarray(point, dtype=float).ravel()
    space = space or VarSpace(point.shape[0], 0)
    if space.l != point.shape[0]:
        raise MomentDegreeError(f"длина точки {point.shape[0]} != l={space.l}")
    exps = np.array(monomial_basis(space.l, degree), dtype=float)
    values = np.prod(point[None, :] ** exps, axis=1)
    return Tms(space, degree, values)


def riesz(w: Tms, f: Polynomial) -> float:
    """L_w(f) = sum f_alpha w_alpha"""
    if f.degree > w.degree:
        raise MomentDegreeError(f"deg f = {f.degree} больше степени tms {w.degree}")
    index = basis_index(w.space.l, w.degree)
    return float(sum(c * w.values[index[mono]] for mono, c in f.terms.items()))


def riesz_vector(f: Polynomial, degree: int) -> np.ndarray:
    """Вектор c с L_w(f) = c . w для любых tms степени degree"""
    if f.degree > degree:
        raise MomentDegreeError(f"deg f = {f.degree} больше {degree}")
    index = basis_index(f.space.l, degree)
    c = np.zeros(basis_size(f.space.l, degree))
    for mono, coef in f.terms.items():
        c[index[mono]] += coef
    return c


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🧱 ЛОКАЛИЗУЮЩИЕ ОПЕРАТОРЫ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


@dataclass(frozen=True)
class MatrixOperator:
    """
    Линейное отображение w -> симметричная матрица size x size.

    matrix: разреженная (size^2 x nvar), строка i*size + j - коэффициенты
    элемента (i, j); parts: блоки блочно-диагонального оператора.
    """

    size: int
    nvar: int
    matrix: sp.csr_matrix
    parts: tuple = ()

    @property
    def block_sizes(self) -> tuple:
        if self.parts:
            return tuple(part.size for part in self.parts)
        return (self.size,) if self.size else ()

    def blocks(self) -> tuple:
        return self.parts if self.parts else ((self,) if self.size else ())

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float).ravel()
        if values.shape[0] != self.nvar:
            raise MomentDegreeError(f"длина вектора {values.shape[0]} != {self.nvar}")
        return (self.matrix @ values).reshape(self.size, self.size)

    def __call__(self, w: Tms) -> np.ndarray:
        return self.apply(w.values)

    def coefficient(self, index: int) -> np.ndarray:
        """A_alpha как плотная матрица"""
        column = self.matrix[:, index].toarray().ravel()
        return column.reshape(self.size, self.size)

    def is_symmetric(self) -> bool:
        if self.size == 0:
            return True
        p = self.size
        perm = np.arange(p * p).reshape(p, p).T.ravel()
        diff = self.matrix[perm, :] - self.matrix
        return diff.count_nonzero() == 0

    def distinct_rows(self) -> sp.csr_matrix:
        """Различные ненулевые строки верхнего треугольника (для равенств L(w) = 0)"""
        p = self.size
        upper = [i * p + j for i in range(p) for j in range(i, p)]
        sub = self.matrix[upper, :].tocsr()
        sub.sort_indices()
        seen = {}
        keep = []
        for r in range(sub.shape[0]):
            start, end = sub.indptr[r], sub.indptr[r + 1]
            if start == end:
                continue
            key = (tuple(sub.indices[start:end]), tuple(sub.data[start:end]))
            if key not in seen:
                seen[key] = r
                keep.append(r)
        if not keep:
            return sp.csr_matrix((0, self.nvar))
        return sub[keep, :].tocsr()


def localizing_operator(q: Polynomial, k: int, tms_degree: Optional[int] = None) -> MatrixOperator:
    """
    k-я локализующая матрица q (при q = 1 - моментная матрица M_k).

    tms_degree - степень всей tms (по умолчанию 2k); индексы столбцов
    берутся из её базиса.
    """
    l = q.space.l
    tms_degree = 2 * k if tms_degree is None else tms_degree
    s = localizing_order(q, k)
    if s < 0 or 2 * k > tms_degree:
        raise MomentDegreeError(f"deg q = {q.degree} не помещается в порядок k={k}")
    rows_basis = monomial_basis(l, s)
    index = basis_index(l, tms_degree)
    p = len(rows_basis)
    nvar = basis_size(l, tms_degree)

    rows, cols, data = [], [], []
    terms = list(q.terms.items())
    for i in range(p):
        bi = rows_basis[i]
        for j in range(i, p):
            base = tuple(a + b for a, b in zip(bi, rows_basis[j]))
            for gamma, coef in terms:
                col = index[tuple(a + g for a, g in zip(base, gamma))]
                rows.append(i * p + j)
                cols.append(col)
                data.append(coef)
                if i != j:
                    rows.append(j * p + i)
                    cols.append(col)
                    data.append(coef)
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(p * p, nvar)).tocsr()
    matrix.sum_duplicates()
    return MatrixOperator(p, nvar, matrix)


def moment_operator(space: VarSpace, k: int, tms_degree: Optional[int] = None) -> MatrixOperator:
    return localizing_operator(Polynomial.constant(space, 1.0), k, tms_degree)


def block_localizing(
    q_tuple: Sequence[Polynomial],
    k: int,
    space: Optional[VarSpace] = None,
    tms_degree: Optional[int] = None,
) -> MatrixOperator:
    """Блочно-диагональная склейка локализующих операторов"""
    q_tuple = tuple(q_tuple)
    if not q_tuple:
        nvar = basis_size(space.l, 2 * k if tms_degree is None else tms_degree) if space else 0
        return MatrixOperator(0, nvar, sp.csr_matrix((0, nvar)))
    parts = tuple(localizing_operator(q, k, tms_degree) for q in q_tuple)
    if len(parts) == 1:
        return parts[0]
    total = sum(part.size for part in parts)
    nvar = parts[0].nvar
    rows, cols, data = [], [], []
    offset = 0
    for part in parts:
        coo = part.matrix.tocoo()
        i, j = np.divmod(coo.row, part.size)
        rows.append((i + offset) * total + (j + offset))
        cols.append(coo.col)
        data.append(coo.data)
        offset += part.size
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(total * total, nvar),
    ).tocsr()
    return MatrixOperator(total, nvar, matrix, parts)


def moment_matrix(w: Tms, t: int) -> np.ndarray:
    """Плотная M_t(w), t <= degree / 2"""
    if 2 * t > w.degree:
        raise MomentDegreeError(f"M_{t} требует tms степени >= {2 * t}, есть {w.degree}")
    return moment_operator(w.space, t, w.degree).apply(w.values)
