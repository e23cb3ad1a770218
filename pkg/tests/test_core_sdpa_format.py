import numpy as np
import pytest
import scipy.sparse as sp

from core_sdp_solver import LmiBlock, SdpProblem, SdpStatus, solve_sdp
from core_sdpa_format import SdpaFormatError, read_sdpa, write_sdpa


@pytest.fixture
def small_problem():
    # min x2 при x1 = 1, [[x1, x2], [x2, x1]] >= 0 и x1 + x2 + 3 >= 0
    operator = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]))
    lmi = LmiBlock(2, operator, None, "lmi")
    scalar = LmiBlock(1, sp.csr_matrix([[1.0, 1.0]]), [[3.0]], "lp")
    return SdpProblem(2, [0.0, 1.0], sp.csr_matrix([[1.0, 0.0]]), [1.0], (lmi, scalar))


def test_written_file_has_sdpa_header(tmp_path, small_problem):
    path = write_sdpa(small_problem, tmp_path / "p.dat-s", comment="пример")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith('"')
    assert lines[1] == "2"
    assert lines[2] == "3"
    assert lines[3] == "2 1 -2"


def test_reread_problem_keeps_structure(tmp_path, small_problem):
    path = write_sdpa(small_problem, tmp_path / "nested" / "p.dat-s")
    back = read_sdpa(path)
    assert back.nvar == 2
    assert back.n_equalities == 1
    assert np.allclose(back.eq_matrix.toarray(), [[1.0, 0.0]])
    assert np.allclose(back.eq_rhs, [1.0])
    assert back.block_sizes == (2, 1)
    x = np.array([0.3, -0.7])
    for orig, read in zip(small_problem.blocks, back.blocks):
        assert np.allclose(orig.value(x), read.value(x))


def test_reread_problem_solves_to_same_value(tmp_path, small_problem):
    path = write_sdpa(small_problem, tmp_path / "p.dat-s")
    first = solve_sdp(small_problem)
    second = solve_sdp(read_sdpa(path))
    assert first.status is SdpStatus.OPTIMAL and second.status is SdpStatus.OPTIMAL
    assert np.isclose(first.objective, -1.0, atol=1e-6)
    assert np.isclose(second.objective, first.objective, atol=1e-6)


def test_reader_accepts_punctuation(tmp_path):
    path = tmp_path / "q.dat-s"
    path.write_text(
        '* комментарий\n1\n1\n{1}\n{1.0}\n0 1 1 1 2.0\n1 1 1 1 1.0\n', encoding="utf-8"
    )
    prob = read_sdpa(path)
    # SDPA: x - 2 >= 0
    assert np.allclose(prob.blocks[0].value(np.array([2.0])), [[0.0]])


def test_malformed_entry_reports_line(tmp_path):
    path = tmp_path / "bad.dat-s"
    path.write_text("1\n1\n1\n1.0\n0 1 1 1\n", encoding="utf-8")
    with pytest.raises(SdpaFormatError) as info:
        read_sdpa(path)
    assert info.value.line == 5


def test_block_index_out_of_range(tmp_path):
    path = tmp_path / "bad.dat-s"
    path.write_text("1\n1\n2\n1.0\n1 2 1 1 1.0\n", encoding="utf-8")
    with pytest.raises(SdpaFormatError) as info:
        read_sdpa(path)
    assert info.value.line == 5


def test_missing_file():
    with pytest.raises(SdpaFormatError):
        read_sdpa("/nonexistent/problem.dat-s")
