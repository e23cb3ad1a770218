#!/usr/bin/env python3
"""
🔣 POLYNOMIAL CORE - разреженные многочлены над пространством (x | y)

Пространство переменных делится на x-блок (x1..xn) и y-блок (y1..ym).
Мономы - кортежи показателей длины l = n + m, коэффициенты - float64.
Все значения неизменяемы: операции возвращают новые многочлены.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from logger import get_logger

logger = get_logger(__name__)

# Порог отбрасывания коэффициентов относительно max |c|
PRUNE_RELATIVE = 1e-14

Monomial = tuple


class PolynomialError(ValueError):
    """Ошибка построения или арифметики многочленов"""


class PolynomialSyntaxError(PolynomialError):
    """Синтаксическая ошибка в выражении (с позицией)"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (позиция {position})")
        self.position = position


class VarSpaceMismatchError(PolynomialError):
    """Операнды живут в разных пространствах переменных"""


class Block(str, Enum):
    X = "x"
    Y = "y"


@dataclass(frozen=True)
class VarSpace:
    """Пространство переменных: n штук x, m штук y"""

    n: int
    m: int = 0

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise PolynomialError(f"некорректное пространство: n={self.n}, m={self.m}")

    @property
    def l(self) -> int:
        return self.n + self.m

    @property
    def names(self) -> tuple:
        return tuple(f"x{i + 1}" for i in range(self.n)) + tuple(f"y{j + 1}" for j in range(self.m))

    def block_dim(self, block: Block) -> int:
        return self.n if Block(block) is Block.X else self.m

    def block_indices(self, block: Block) -> range:
        if Block(block) is Block.X:
            return range(0, self.n)
        return range(self.n, self.n + self.m)

    def without(self, block: Block) -> "VarSpace":
        if Block(block) is Block.X:
            return VarSpace(0, self.m)
        return VarSpace(self.n, 0)

    def only(self, block: Block) -> "VarSpace":
        return self.without(Block.Y if Block(block) is Block.X else Block.X)


def grlex_key(mono: Monomial) -> tuple:
    """Ключ градуированного лексикографического порядка (x раньше y)"""
    return (sum(mono), tuple(-e for e in mono))


def _canonical(terms: Iterable) -> dict:
    combined: dict = {}
    for mono, coef in terms:
        coef = float(coef)
        if coef == 0.0:
            continue
        combined[mono] = combined.get(mono, 0.0) + coef
    if not combined:
        return {}
    scale = max(abs(c) for c in combined.values())
    threshold = PRUNE_RELATIVE * scale
    return {mono: c for mono, c in combined.items() if c != 0.0 and abs(c) >= threshold}


class Polynomial:
    """Разреженный вещественный многочлен (моном -> ненулевой коэффициент)"""

    __slots__ = ("_space", "_terms", "_arrays")

    def __init__(self, space: VarSpace, terms: Union[Mapping, Iterable, None] = None):
        self._space = space
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        canonical = {}
        for mono, coef in _canonical(items).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != space.l or any(e < 0 for e in mono):
                raise PolynomialError(f"моном {mono} не подходит к пространству l={space.l}")
            canonical[mono] = coef
        self._terms = canonical
        self._arrays = None

    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
    # Конструкторы
    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

    @classmethod
    def zero(cls, space: VarSpace) -> "Polynomial":
        return cls(space)

    @classmethod
    def constant(cls, space: VarSpace, value: float) -> "Polynomial":
        return cls(space, {(0,) * space.l: value})

    @classmethod
    def variable(cls, space: VarSpace, index: int) -> "Polynomial":
        if not 0 <= index < space.l:
            raise PolynomialError(f"переменная #{index} вне пространства l={space.l}")
        mono = tuple(1 if i == index else 0 for i in range(space.l))
        return cls(space, {mono: 1.0})

    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
    # Свойства
    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

    @property
    def space(self) -> VarSpace:
        return self._space

    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        # deg(0) = 0
        return max((sum(m) for m in self._terms), default=0)

    def degree_in(self, block: Block) -> int:
        idx = list(self._space.block_indices(block))
        return max((sum(m[i] for i in idx) for m in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    @property
    def constant_value(self) -> float:
        return self._terms.get((0,) * self._space.l, 0.0)

    def coefficient(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=lambda item: grlex_key(item[0]))

    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
    # Арифметика
    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._space != self._space:
                raise VarSpaceMismatchError(
                    f"разные пространства: {self._space} и {other._space}"
                )
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Polynomial.constant(self._space, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        merged = list(self._terms.items()) + list(other._terms.items())
        return Polynomial(self._space, merged)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._space, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        products = []
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                products.append((tuple(a + b for a, b in zip(ma, mb)), ca * cb))
        return Polynomial(self._space, products)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)) or exponent < 0:
            raise PolynomialError(f"степень должна быть неотрицательным целым, получено {exponent!r}")
        result = Polynomial.constant(self._space, 1.0)
        base = self
        e = int(exponent)
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self._space, {m: factor * c for m, c in self._terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._space == other._space and self._terms == other._terms

    def __hash__(self):
        return hash((self._space, frozenset(self._terms.items())))

    def is_close(self, other: "Polynomial", tol: float = 1e-10) -> bool:
        """Покоэффициентное сравнение с относительным допуском"""
        other = self._coerce(other)
        diff = self - other
        scale = max(1.0, self.norm1(), other.norm1())
        return all(abs(c) <= tol * scale for c in diff._terms.values())

    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
    # Вычисление и анализ
    # ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

    def _term_arrays(self):
        if self._arrays is None:
            if self._terms:
                exps = np.array(list(self._terms.keys()), dtype=float)
                coefs = np.array(list(self._terms.values()), dtype=float)
            else:
                exps = np.zeros((0, self._space.l))
                coefs = np.zeros(0)
            self._arrays = (exps, coefs)
        return self._arrays

    def evaluate(self, point: Sequence[float]) -> float:
        point = np.asarray(point, dtype=float).ravel()
        if point.shape[0] != self._space.l:
            raise PolynomialError(f"длина точки {point.shape[0]} != l={self._space.l}")
        exps, coefs = self._term_arrays()
        if coefs.size == 0:
            return 0.0
        return float(np.prod(point[None, :] ** exps, axis=1) @ coefs)

    def evaluate_many(self, points) -> np.ndarray:
        """Значения в пачке точек (K x l)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self._space.l:
            raise PolynomialError(f"ширина пачки {points.shape[1]} != l={self._space.l}")
        exps, coefs = self._term_arrays()
        if coefs.size == 0:
            return np.zeros(points.shape[0])
        return np.prod(points[:, None, :] ** exps[None, :, :], axis=2) @ coefs

    def derivative(self, index: int) -> "Polynomial":
        if not 0 <= index < self._space.l:
            raise PolynomialError(f"переменная #{index} вне пространства l={self._space.l}")
        terms = []
        for mono, coef in self._terms.items():
            e = mono[index]
            if e == 0:
                continue
            lowered = mono[:index] + (e - 1,) + mono[index + 1:]
            terms.append((lowered, coef * e))
        return Polynomial(self._space, terms)

    def gradient(self, block: Block) -> tuple:
        indices = self._space.block_indices(block)
        if len(indices) == 0:
            raise PolynomialError(f"блок {Block(block).value} пуст, градиент не определён")
        return tuple(self.derivative(i) for i in indices)

    def substitute_block(self, block: Block, values: Sequence[float]) -> "Polynomial":
        """Подставить значения блока; результат живёт в оставшемся блоке"""
        block = Block(block)
        indices = list(self._space.block_indices(block))
        values = np.asarray(values, dtype=float).ravel()
        if len(indices) == 0:
            raise PolynomialError(f"блок {block.value} пуст, подставлять нечего")
        if values.shape[0] != len(indices):
            raise PolynomialError(f"длина значений {values.shape[0]} != размер блока {len(indices)}")
        target = self._space.without(block)
        keep = [i for i in range(self._space.l) if i not in set(indices)]
        terms = []
        for mono, coef in self._terms.items():
            factor = coef
            for pos, i in enumerate(indices):
                if mono[i]:
                    factor *= values[pos] ** mono[i]
            terms.append((tuple(mono[i] for i in keep), factor))
        return Polynomial(target, terms)

    def lift(self, target: VarSpace) -> "Polynomial":
        """Вложить многочлен блока (или пары блоков) в более широкое пространство"""
        src = self._space
        if src == target:
            return self
        if src.n > target.n or src.m > target.m:
            raise VarSpaceMismatchError(f"нельзя вложить {src} в {target}")
        pad_x = (0,) * (target.n - src.n)
        pad_y = (0,) * (target.m - src.m)
        terms = [
            (mono[:src.n] + pad_x + mono[src.n:] + pad_y, coef)
            for mono, coef in self._terms.items()
        ]
        return Polynomial(target, terms)

    def render(self) -> str:
        return render(self)

    def __repr__(self):
        return f"Polynomial({render(self)!r}, n={self._space.n}, m={self._space.m})"


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Функциональный интерфейс
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def variables(space: VarSpace, block: Block = None) -> tuple:
    indices = range(space.l) if block is None else space.block_indices(block)
    return tuple(Polynomial.variable(space, i) for i in indices)


def squared_norm(space: VarSpace, block: Block = None) -> Polynomial:
    """sum z_i^2 по блоку (или по всем переменным)"""
    result = Polynomial.zero(space)
    for v in variables(space, block):
        result = result + v * v
    return result


def arith(op: str, *operands) -> Polynomial:
    """add / sub / mul / scale / pow"""
    if op == "add":
        result = operands[0]
        for p in operands[1:]:
            result = result + _require_poly(result, p)
        return result
    if op == "sub":
        left, right = operands
        return left - _require_poly(left, right)
    if op == "mul":
        result = operands[0]
        for p in operands[1:]:
            result = result * _require_poly(result, p)
        return result
    if op == "scale":
        p, factor = operands
        return p.scale(float(factor))
    if op == "pow":
        p, exponent = operands
        return p ** exponent
    raise PolynomialError(f"неизвестная операция '{op}'")


def _require_poly(anchor: Polynomial, other) -> Polynomial:
    if not isinstance(other, Polynomial):
        raise PolynomialError(f"ожидался Polynomial, получено {type(other).__name__}")
    if other.space != anchor.space:
        raise VarSpaceMismatchError(f"разные пространства: {anchor.space} и {other.space}")
    return other


def evaluate(p: Polynomial, point: Sequence[float]) -> float:
    return p.evaluate(point)


def gradient(p: Polynomial, block: Block) -> tuple:
    return p.gradient(block)


def substitute_block(p: Polynomial, block: Block, values: Sequence[float]) -> Polynomial:
    return p.substitute_block(block, values)


def render(p: Polynomial) -> str:
    """Каноническая запись в грамматике parse_poly (точный round-trip)"""
    if p.is_zero:
        return "0"
    names = p.space.names
    pieces = []
    for mono, coef in p.sorted_terms():
        factors = []
        for name, e in zip(names, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        magnitude = abs(coef)
        if not factors:
            body = repr(magnitude)
        elif magnitude == 1.0:
            body = "*".join(factors)
        else:
            body = repr(magnitude) + "*" + "*".join(factors)
        if not pieces:
            pieces.append(("-" if coef < 0 else "") + body)
        else:
            pieces.append((" - " if coef < 0 else " + ") + body)
    return "".join(pieces)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# 📜 ПАРСЕР
# expr  := term (('+'|'-') term)*
# term  := unary ('*' unary)*
# unary := ('+'|'-') unary | power
# power := primary ('^' unary)?
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>dF/d[xy]\d+|[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()])"
)


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise PolynomialSyntaxError(f"неожиданный символ '{text[pos]}'", pos)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, space: VarSpace, symbols: Mapping, names: Sequence = None):
        self.tokens = _tokenize(text)
        self.index = 0
        self.space = space
        self.symbols = symbols or {}
        names = space.names if names is None else tuple(names)
        if len(names) != space.l:
            raise PolynomialError(f"имён {len(names)}, а переменных {space.l}")
        self.lookup = {name: i for i, name in enumerate(names)}

    def peek(self):
        return self.tokens[self.index]

    def take(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def parse(self) -> Polynomial:
        result = self.parse_expr()
        kind, text, pos = self.peek()
        if kind != "end":
            if kind in ("number", "name") or text == "(":
                raise PolynomialSyntaxError(f"неявное умножение не поддерживается ('{text}')", pos)
            raise PolynomialSyntaxError(f"лишний токен '{text}'", pos)
        return result

    def parse_expr(self) -> Polynomial:
        result = self.parse_term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, _ = self.take()
            right = self.parse_term()
            result = result + right if op == "+" else result - right
        return result

    def parse_term(self) -> Polynomial:
        result = self.parse_unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            result = result * self.parse_unary()
        return result

    def parse_unary(self) -> Polynomial:
        kind, text, _ = self.peek()
        if kind == "op" and text in ("+", "-"):
            self.take()
            operand = self.parse_unary()
            return -operand if text == "-" else operand
        return self.parse_power()

    def parse_power(self) -> Polynomial:
        base = self.parse_primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            exponent = self.parse_unary()
            value = exponent.constant_value
            if not exponent.is_constant or not float(value).is_integer() or value < 0:
                raise PolynomialSyntaxError("показатель степени должен быть неотрицательным целым", pos)
            return base ** int(value)
        return base

    def parse_primary(self) -> Polynomial:
        kind, text, pos = self.take()
        if kind == "number":
            return Polynomial.constant(self.space, float(text))
        if kind == "name":
            if text in self.symbols:
                return self.symbols[text]
            if text in self.lookup:
                return Polynomial.variable(self.space, self.lookup[text])
            raise PolynomialSyntaxError(f"неизвестная переменная '{text}'", pos)
        if kind == "op" and text == "(":
            inner = self.parse_expr()
            closing = self.take()
            if closing[1] != ")":
                raise PolynomialSyntaxError("ожидалась ')'", closing[2])
            return inner
        if kind == "end":
            raise PolynomialSyntaxError("неожиданный конец выражения", pos)
        raise PolynomialSyntaxError(f"неожиданный токен '{text}'", pos)


def parse_poly(expr: str, space: VarSpace, symbols: Mapping = None, names: Sequence = None) -> Polynomial:
    """
    Разобрать выражение в каноническую форму.

    Args:
        expr: строка вида "x1*x2 + y1^2"
        space: пространство переменных
        symbols: дополнительные имена (например "dF/dx1") -> Polynomial того же пространства
        names: собственные имена переменных вместо x1..xn, y1..ym
    """
    if not isinstance(expr, str):
        raise PolynomialSyntaxError(f"ожидалась строка, получено {type(expr).__name__}", 0)
    return _Parser(expr, space, symbols, names).parse()
