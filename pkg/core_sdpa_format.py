#!/usr/bin/env python3
"""
📄 SDPA FORMAT - запись и чтение разреженного формата .dat-s

Первичная задача SDPA:
    min  sum_i c_i x_i   при  X = sum_i F_i x_i - F_0 >= 0

Наша задача S = C + sum_i x_i A_i отображается как F_0 = -C, F_i = A_i.
Равенства B x = b пишутся диагональным LP-блоком парами
(B x - b >= 0, -(B x - b) >= 0); при чтении такие пары снова
склеиваются в равенства.
"""

import re
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

from core_sdp_solver import LmiBlock, SdpProblem
from logger import get_logger

logger = get_logger(__name__)

_SEPARATORS = re.compile(r"[{}(),]")


class SdpaFormatError(ValueError):
    """Файл SDPA повреждён или не согласован"""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"{message} (строка {line})" if line else message)
        self.line = line


def _fmt(value: float) -> str:
    return repr(float(value))


def write_sdpa(prob: SdpProblem, path: Union[str, Path], comment: str = "") -> Path:
    """Записать задачу в .dat-s, вернуть путь"""
    path = Path(path)
    blocks = [blk for blk in prob.blocks if blk.size > 0]
    m_eq = prob.n_equalities
    sizes = [str(blk.size) for blk in blocks]
    if m_eq:
        sizes.append(str(-2 * m_eq))

    lines = []
    if comment:
        lines.extend(f'" {row}' for row in comment.splitlines())
    lines.append(str(prob.nvar))
    lines.append(str(len(sizes)))
    lines.append(" ".join(sizes))
    lines.append(" ".join(_fmt(v) for v in prob.objective))

    for b_no, blk in enumerate(blocks, start=1):
        p = blk.size
        for i in range(p):
            for j in range(i, p):
                if blk.constant[i, j] != 0.0:
                    lines.append(f"0 {b_no} {i + 1} {j + 1} {_fmt(-blk.constant[i, j])}")
        coo = blk.operator.tocoo()
        for row, col, value in sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[1], t[0])):
            i, j = divmod(int(row), p)
            if i <= j and value != 0.0:
                lines.append(f"{col + 1} {b_no} {i + 1} {j + 1} {_fmt(value)}")

    if m_eq:
        lp_no = len(blocks) + 1
        for r, rhs in enumerate(prob.eq_rhs):
            if rhs != 0.0:
                lines.append(f"0 {lp_no} {2 * r + 1} {2 * r + 1} {_fmt(rhs)}")
                lines.append(f"0 {lp_no} {2 * r + 2} {2 * r + 2} {_fmt(-rhs)}")
        coo = prob.eq_matrix.tocoo()
        for r, col, value in sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[1], t[0])):
            if value != 0.0:
                lines.append(f"{col + 1} {lp_no} {2 * r + 1} {2 * r + 1} {_fmt(value)}")
                lines.append(f"{col + 1} {lp_no} {2 * r + 2} {2 * r + 2} {_fmt(-value)}")

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"💾 SDPA: {path} ({prob.nvar} переменных, {len(sizes)} блоков)")
    return path


def read_sdpa(path: Union[str, Path]) -> SdpProblem:
    """Прочитать .dat-s (в том числе записанный write_sdpa)"""
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise SdpaFormatError(f"не удалось прочитать {path}: {e}") from e

    content = []
    for number, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "\"*":
            continue
        tokens = _SEPARATORS.sub(" ", stripped).split()
        if tokens:
            content.append((number, tokens))
    if len(content) < 4:
        raise SdpaFormatError("в файле меньше четырёх значимых строк")

    try:
        nvar = int(content[0][1][0])
        nblocks = int(content[1][1][0])
        sizes = [int(float(t)) for t in content[2][1]]
    except ValueError as e:
        raise SdpaFormatError(f"заголовок не разобран: {e}", content[0][0]) from e
    if len(sizes) != nblocks:
        raise SdpaFormatError(f"ожидалось {nblocks} размеров блоков, найдено {len(sizes)}", content[2][0])

    objective_tokens = content[3][1]
    if len(objective_tokens) != nvar:
        raise SdpaFormatError(f"в векторе c {len(objective_tokens)} чисел вместо {nvar}", content[3][0])
    objective = np.array([float(t) for t in objective_tokens])

    dense = {b: (np.zeros((abs(s), abs(s))), {}) for b, s in enumerate(sizes, start=1) if s > 0}
    diag = {b: (np.zeros(-s), {}) for b, s in enumerate(sizes, start=1) if s < 0}

    for number, tokens in content[4:]:
        if len(tokens) != 5:
            raise SdpaFormatError(f"ожидалось 5 полей, найдено {len(tokens)}", number)
        try:
            mat, blk, i, j = (int(t) for t in tokens[:4])
            value = float(tokens[4])
        except ValueError as e:
            raise SdpaFormatError(f"запись не разобрана: {e}", number) from e
        if not 0 <= mat <= nvar or not 1 <= blk <= nblocks:
            raise SdpaFormatError(f"матрица {mat} или блок {blk} вне диапазона", number)
        size = abs(sizes[blk - 1])
        if not (1 <= i <= size and 1 <= j <= size):
            raise SdpaFormatError(f"индекс ({i}, {j}) вне блока размера {size}", number)
        if blk in diag:
            if i != j:
                raise SdpaFormatError("внедиагональный элемент в LP-блоке", number)
            f0, fi = diag[blk]
            if mat == 0:
                f0[i - 1] += value
            else:
                fi.setdefault(i - 1, {}).setdefault(mat - 1, 0.0)
                fi[i - 1][mat - 1] += value
        else:
            f0, fi = dense[blk]
            i, j = min(i, j) - 1, max(i, j) - 1
            if mat == 0:
                f0[i, j] += value
                if i != j:
                    f0[j, i] += value
            else:
                fi.setdefault((i, j), {}).setdefault(mat - 1, 0.0)
                fi[(i, j)][mat - 1] += value

    blocks = []
    for b in sorted(dense):
        f0, fi = dense[b]
        p = f0.shape[0]
        rows, cols, data = [], [], []
        for (i, j), entries in fi.items():
            for col, value in entries.items():
                rows.append(i * p + j)
                cols.append(col)
                data.append(value)
                if i != j:
                    rows.append(j * p + i)
                    cols.append(col)
                    data.append(value)
        operator = sp.coo_matrix((data, (rows, cols)), shape=(p * p, nvar)).tocsr()
        blocks.append(LmiBlock(p, operator, -f0, label=f"block{b}"))

    eq_rows, eq_rhs = [], []
    for b in sorted(diag):
        f0, fi = diag[b]
        size = f0.shape[0]
        d = 0
        while d < size:
            row = fi.get(d, {})
            if d + 1 < size:
                partner = fi.get(d + 1, {})
                mirrored = f0[d + 1] == -f0[d] and set(row) == set(partner) and all(
                    partner[c] == -v for c, v in row.items()
                )
                if mirrored and row:
                    vector = np.zeros(nvar)
                    for col, value in row.items():
                        vector[col] = value
                    eq_rows.append(vector)
                    eq_rhs.append(f0[d])
                    d += 2
                    continue
            operator = sp.csr_matrix(
                (list(row.values()), ([0] * len(row), list(row.keys()))), shape=(1, nvar)
            )
            blocks.append(LmiBlock(1, operator, np.array([[-f0[d]]]), label=f"lp{b}.{d + 1}"))
            d += 1

    eq_matrix = sp.csr_matrix(np.array(eq_rows)) if eq_rows else sp.csr_matrix((0, nvar))
    prob = SdpProblem(nvar, objective, eq_matrix, np.array(eq_rhs), tuple(blocks))
    logger.info(f"📂 SDPA: {path} -> {nvar} переменных, {len(eq_rhs)} равенств, {len(blocks)} блоков")
    return prob
