#!/usr/bin/env python3
"""
📐 LAGRANGE PRESETS - множества ограничений и выражения множителей Лагранжа

Каждое множество X (или Y) задаётся кортежем многочленов своего блока:
сначала равенства, затем неравенства. Для каждого ограничения хранится
шаблон множителя, линейный по градиенту F:

    lambda_i(x, y) = sum_j c_ij(x) * dF/dx_j(x, y)

Шаблоны пресетов выписаны в закрытой форме, для своих множеств
их задаёт пользователь (символы dF/dx1, dF/dy2, ...).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from core_polynomial import (
    Block,
    Polynomial,
    PolynomialError,
    VarSpace,
    parse_poly,
    squared_norm,
    variables,
)
from logger import get_logger

logger = get_logger(__name__)

# Сингулярные числа ниже этой доли sigma_max считаются нулевыми
NONSINGULAR_RANK_TOL = 1e-8


class ConstraintSetError(ValueError):
    """Некорректное описание множества"""


class LagrangeTemplateError(ValueError):
    """Шаблон множителя не согласован с множеством"""


class NonsingularityError(ValueError):
    """Выборочная проверка невырожденности провалилась"""

    def __init__(self, message: str, witness: np.ndarray):
        super().__init__(message)
        self.witness = witness


class PresetKind(str, Enum):
    SIMPLEX = "simplex"
    HYPERCUBE_PM1 = "hypercube"
    BOX_UNIT = "box"
    BALL = "ball"
    SPHERE = "sphere"
    NONNEG_ORTHANT = "orthant"
    FREE = "free"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MultiplierTemplate:
    """Пары (коэффициент c_ij из блока, индекс j частной производной)"""

    terms: tuple = ()

    def render(self, block: Block) -> str:
        pieces = [f"({coef.render()})*dF/d{Block(block).value}{j + 1}" for coef, j in self.terms]
        return " + ".join(pieces) if pieces else "0"


@dataclass(frozen=True)
class ConstraintSet:
    block: Block
    dim: int
    kind: PresetKind
    equalities: tuple = ()
    inequalities: tuple = ()
    templates: tuple = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.templates) != len(self.equalities) + len(self.inequalities):
            raise LagrangeTemplateError(
                f"шаблонов {len(self.templates)}, ограничений "
                f"{len(self.equalities) + len(self.inequalities)}"
            )
        if self.dim == 0:
            return
        space = self.block_space
        for poly in self.constraints:
            if poly.space != space:
                raise ConstraintSetError(f"ограничение {poly.render()} не из блока {self.block.value}")
        for template in self.templates:
            for coef, j in template.terms:
                if coef.space != space:
                    raise LagrangeTemplateError("коэффициент шаблона зависит не только от своего блока")
                if not 0 <= j < self.dim:
                    raise LagrangeTemplateError(f"индекс производной {j} вне блока размерности {self.dim}")

    @property
    def block_space(self) -> VarSpace:
        return VarSpace(self.dim, 0) if self.block is Block.X else VarSpace(0, self.dim)

    @property
    def constraints(self) -> tuple:
        return tuple(self.equalities) + tuple(self.inequalities)

    @property
    def size(self) -> int:
        return len(self.equalities) + len(self.inequalities)

    @property
    def degrees(self) -> tuple:
        return tuple(max(1, g.degree) for g in self.constraints)

    def is_equality(self, index: int) -> bool:
        return index < len(self.equalities)

    def lifted(self, space: VarSpace) -> tuple:
        """(равенства, неравенства) во всём пространстве"""
        return (
            tuple(g.lift(space) for g in self.equalities),
            tuple(g.lift(space) for g in self.inequalities),
        )

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        point = np.asarray(point, dtype=float)
        return all(abs(g.evaluate(point)) <= tol for g in self.equalities) and all(
            g.evaluate(point) >= -tol for g in self.inequalities
        )


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🧱 ПРЕСЕТЫ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _single(coef: Polynomial, j: int) -> MultiplierTemplate:
    return MultiplierTemplate(((coef, j),))


def _euler(z: tuple, scale: float) -> MultiplierTemplate:
    """scale * z^T grad F"""
    return MultiplierTemplate(tuple((zj.scale(scale), j) for j, zj in enumerate(z)))


def preset(kind: PresetKind, block: Block, dim: int) -> ConstraintSet:
    kind = PresetKind(kind)
    block = Block(block)
    if kind is PresetKind.CUSTOM:
        raise ConstraintSetError("своё множество строится через custom_set()")
    if kind is PresetKind.FREE:
        if dim < 0:
            raise ConstraintSetError(f"размерность должна быть >= 0, получено {dim}")
        return ConstraintSet(block, dim, kind, name=kind.value)
    if dim < 1:
        raise ConstraintSetError(f"размерность должна быть >= 1, получено {dim}")

    space = VarSpace(dim, 0) if block is Block.X else VarSpace(0, dim)
    z = variables(space)
    one = Polynomial.constant(space, 1.0)
    equalities, inequalities, templates = (), (), ()

    if kind is PresetKind.SIMPLEX:
        equalities = (sum(z, Polynomial.zero(space)) - 1.0,)
        inequalities = z
        euler = _euler(z, 1.0)
        templates = (euler,) + tuple(
            MultiplierTemplate(((one, i),) + tuple((zj.scale(-1.0), j) for j, zj in enumerate(z)))
            for i in range(dim)
        )
    elif kind is PresetKind.HYPERCUBE_PM1:
        inequalities = tuple(1.0 - zi * zi for zi in z)
        templates = tuple(_single(zi.scale(-0.5), i) for i, zi in enumerate(z))
    elif kind is PresetKind.BOX_UNIT:
        inequalities = z + tuple(1.0 - zi for zi in z)
        templates = tuple(_single(1.0 - zi, i) for i, zi in enumerate(z)) + tuple(
            _single(zi.scale(-1.0), i) for i, zi in enumerate(z)
        )
    elif kind in (PresetKind.BALL, PresetKind.SPHERE):
        g = 1.0 - squared_norm(space)
        if kind is PresetKind.BALL:
            inequalities = (g,)
        else:
            equalities = (g,)
        templates = (_euler(z, -0.5),)
    elif kind is PresetKind.NONNEG_ORTHANT:
        inequalities = z
        templates = tuple(_single(one, i) for i in range(dim))

    return ConstraintSet(
        block, dim, kind,
        equalities=tuple(equalities),
        inequalities=tuple(inequalities),
        templates=tuple(templates),
        name=kind.value,
    )


def template_from_expression(expr: str, block: Block, dim: int) -> MultiplierTemplate:
    """
    Разобрать выражение множителя вида "(1 - x1*x2)*dF/dx1".

    Выражение обязано быть линейным по символам dF/d*: каждый моном
    содержит ровно одну частную производную в первой степени.
    """
    block = Block(block)
    prefix = block.value
    block_names = tuple(f"{prefix}{i + 1}" for i in range(dim))
    partial_names = tuple(f"dF/d{prefix}{i + 1}" for i in range(dim))
    work = VarSpace(2 * dim, 0)
    try:
        parsed = parse_poly(expr, work, names=block_names + partial_names)
    except PolynomialError as e:
        raise LagrangeTemplateError(f"шаблон '{expr}': {e}") from e

    space = VarSpace(dim, 0) if block is Block.X else VarSpace(0, dim)
    collected = {}
    for mono, coef in parsed.terms.items():
        own, partial = mono[:dim], mono[dim:]
        if sum(partial) != 1:
            raise LagrangeTemplateError(
                f"шаблон '{expr}' не линеен по частным производным F"
            )
        collected.setdefault(partial.index(1), []).append((own, coef))
    terms = tuple((Polynomial(space, pairs), j) for j, pairs in sorted(collected.items()))
    return MultiplierTemplate(terms)


def custom_set(
    block: Block,
    dim: int,
    equalities: Sequence[Polynomial],
    inequalities: Sequence[Polynomial],
    templates: Sequence[MultiplierTemplate],
    name: str = "custom",
) -> ConstraintSet:
    if dim < 1:
        raise ConstraintSetError(f"размерность должна быть >= 1, получено {dim}")
    return ConstraintSet(
        Block(block), dim, PresetKind.CUSTOM,
        equalities=tuple(equalities),
        inequalities=tuple(inequalities),
        templates=tuple(templates),
        name=name,
    )


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🧮 МНОЖИТЕЛИ
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def instantiate_multipliers(cs: ConstraintSet, F: Polynomial) -> tuple:
    """Подставить градиент F в шаблоны: конкретные lambda_i(x, y) (или mu_j)"""
    if cs.size == 0:
        return ()
    space = F.space
    if space.block_dim(cs.block) != cs.dim:
        raise LagrangeTemplateError(
            f"блок {cs.block.value} у F имеет размерность {space.block_dim(cs.block)}, у множества {cs.dim}"
        )
    grad = F.gradient(cs.block)
    multipliers = []
    for template in cs.templates:
        total = Polynomial.zero(space)
        for coef, j in template.terms:
            if not 0 <= j < len(grad):
                raise LagrangeTemplateError(f"индекс производной {j} вне блока")
            total = total + coef.lift(space) * grad[j]
        multipliers.append(total)
    return tuple(multipliers)


def evaluate_multipliers(cs: ConstraintSet, point: Sequence[float], grad: Sequence[float]) -> np.ndarray:
    """Значения шаблонов в точке блока при заданном векторе градиента"""
    point = np.asarray(point, dtype=float)
    grad = np.asarray(grad, dtype=float)
    values = np.zeros(cs.size)
    for i, template in enumerate(cs.templates):
        values[i] = sum(coef.evaluate(point) * grad[j] for coef, j in template.terms)
    return values


def constraint_matrix(cs: ConstraintSet, point: Sequence[float]) -> np.ndarray:
    """Матрица G(x) размера (dim + l) x l: градиенты сверху, diag(g) снизу"""
    point = np.asarray(point, dtype=float)
    ell = cs.size
    G = np.zeros((cs.dim + ell, ell))
    for i, g in enumerate(cs.constraints):
        G[: cs.dim, i] = [d.evaluate(point) for d in g.gradient(cs.block)]
        G[cs.dim + i, i] = g.evaluate(point)
    return G


@dataclass(frozen=True)
class NonsingularityCheck:
    passed: bool
    witness: Optional[np.ndarray] = None
    rank: int = 0


def check_nonsingularity_sampled(
    cs: ConstraintSet,
    trials: int,
    seed: int,
    extra_points: Sequence = (),
) -> NonsingularityCheck:
    """
    Рандомизированная проверка rank G(x) = l.

    Проверяются начало координат, trials случайных точек и extra_points
    (например, извлечённые кандидаты). Успех не является доказательством.
    """
    if trials < 1:
        raise ConstraintSetError(f"trials должно быть >= 1, получено {trials}")
    ell = cs.size
    if ell == 0:
        return NonsingularityCheck(True)
    rng = np.random.default_rng(seed)
    candidates = [np.zeros(cs.dim)]
    candidates += list(rng.standard_normal((trials, cs.dim)))
    candidates += [np.asarray(p, dtype=float) for p in extra_points]

    for point in candidates:
        G = constraint_matrix(cs, point)
        sigma = np.linalg.svd(G, compute_uv=False)
        top = sigma[0] if sigma.size else 0.0
        rank = int(np.sum(sigma > NONSINGULAR_RANK_TOL * top)) if top > 0 else 0
        if rank < ell:
            logger.warning(f"⚠️ {cs.name}: rank G = {rank} < {ell} в точке {np.round(point, 4).tolist()}")
            return NonsingularityCheck(False, point, rank)
    logger.debug(f"🔍 {cs.name}: G(x) полного ранга в {len(candidates)} точках")
    return NonsingularityCheck(True, None, ell)


def require_nonsingular(cs: ConstraintSet, trials: int, seed: int) -> None:
    check = check_nonsingularity_sampled(cs, trials, seed)
    if not check.passed:
        raise NonsingularityError(
            f"кортеж ограничений блока {cs.block.value} вырожден (rank {check.rank} < {cs.size})",
            check.witness,
        )


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 🎲 ВЫБОРКА ДОПУСТИМЫХ ТОЧЕК
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━


def _ball_points(rng, count: int, dim: int, radius: float) -> np.ndarray:
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return directions * radii[:, None]


def sample_feasible(
    cs: ConstraintSet,
    count: int,
    rng: np.random.Generator,
    radius: Optional[float] = None,
) -> np.ndarray:
    """
    Случайные точки множества (count x dim).

    radius ограничивает неограниченные множества (ортант, всё пространство,
    свои множества без равенств). Для своих множеств с равенствами
    выборка не строится: возвращается пустой массив.
    """
    dim = cs.dim
    bound = 3.0 if radius is None else float(radius)
    kind = cs.kind

    if kind is PresetKind.SIMPLEX:
        points = rng.dirichlet(np.ones(dim), size=count)
    elif kind is PresetKind.HYPERCUBE_PM1:
        points = rng.uniform(-1.0, 1.0, size=(count, dim))
    elif kind is PresetKind.BOX_UNIT:
        points = rng.random((count, dim))
    elif kind is PresetKind.BALL:
        points = _ball_points(rng, count, dim, 1.0)
    elif kind is PresetKind.SPHERE:
        points = rng.standard_normal((count, dim))
        points /= np.linalg.norm(points, axis=1, keepdims=True)
    elif kind is PresetKind.NONNEG_ORTHANT:
        points = np.abs(_ball_points(rng, count, dim, bound))
    elif kind is PresetKind.FREE:
        points = _ball_points(rng, count, dim, bound)
    else:
        if cs.equalities:
            logger.warning(f"⚠️ {cs.name}: множество с равенствами, случайная выборка пропущена")
            return np.zeros((0, dim))
        accepted = []
        total = 0
        for _ in range(50):
            batch = rng.uniform(-bound, bound, size=(count, dim))
            mask = np.ones(count, dtype=bool)
            for g in cs.inequalities:
                mask &= g.evaluate_many(batch) >= 0.0
            accepted.append(batch[mask])
            total += int(mask.sum())
            if total >= count:
                break
        points = np.vstack(accepted)[:count] if accepted else np.zeros((0, dim))
        if len(points) < count:
            logger.warning(f"⚠️ {cs.name}: набрано {len(points)} из {count} допустимых точек")
    return points
