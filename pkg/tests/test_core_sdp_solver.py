import numpy as np
import pytest
import scipy.sparse as sp

from core_sdp_solver import (
    InconsistentEqualitiesError,
    InfeasibilityCertificate,
    LmiBlock,
    SdpOptions,
    SdpProblem,
    SdpProblemError,
    SdpStatus,
    equality_nullspace,
    presolve,
    solve_sdp,
    verify_certificate,
)


def scalar_block(coefs, constant, label=""):
    """1x1 блок c + a^T x >= 0"""
    return LmiBlock(1, sp.csr_matrix(np.atleast_2d(np.asarray(coefs, dtype=float))), [[constant]], label)


def no_equalities(nvar):
    return sp.csr_matrix((0, nvar)), np.zeros(0)


def test_scalar_lower_bound():
    B, b = no_equalities(1)
    prob = SdpProblem(1, [1.0], B, b, (scalar_block([1.0], -1.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, 1.0, atol=1e-6)
    assert np.isclose(sol.x[0], 1.0, atol=1e-6)


def test_two_by_two_lmi():
    # [[x, 1], [1, x]] >= 0  <=>  x >= 1
    operator = sp.csr_matrix(np.array([[1.0], [0.0], [0.0], [1.0]]))
    block = LmiBlock(2, operator, [[0.0, 1.0], [1.0, 0.0]], "lmi")
    B, b = no_equalities(1)
    sol = solve_sdp(SdpProblem(1, [1.0], B, b, (block,)))
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, 1.0, atol=1e-6)
    assert sol.residuals.within(1e-6)


def test_equality_constrained_lp():
    B = sp.csr_matrix([[1.0, 2.0]])
    blocks = (scalar_block([1.0, 0.0], 0.0), scalar_block([0.0, 1.0], 0.0))
    sol = solve_sdp(SdpProblem(2, [1.0, 1.0], B, [4.0], blocks))
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, 2.0, atol=1e-6)
    assert np.allclose(sol.x, [0.0, 2.0], atol=1e-5)


def test_weak_duality_on_optimal_exit():
    operator = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]))
    block = LmiBlock(2, operator, [[0.0, 0.0], [0.0, 0.0]])
    B = sp.csr_matrix([[1.0, 0.0]])
    sol = solve_sdp(SdpProblem(2, [0.0, 1.0], B, [1.0], (block,)))
    # [[1, x2], [x2, 1]] >= 0 -> x2 >= -1
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, -1.0, atol=1e-6)
    assert sol.objective >= sol.dual_objective - 1e-6


def test_primal_infeasible_has_verified_certificate():
    B, b = no_equalities(1)
    blocks = (scalar_block([1.0], -1.0), scalar_block([-1.0], 0.0))
    prob = SdpProblem(1, [1.0], B, b, blocks)
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.PRIMAL_INFEASIBLE
    assert sol.certificate.kind == "primal"
    assert verify_certificate(prob, sol.certificate)


def test_dual_infeasible_when_unbounded():
    B, b = no_equalities(1)
    prob = SdpProblem(1, [1.0], B, b, (scalar_block([-1.0], 0.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.DUAL_INFEASIBLE
    assert verify_certificate(prob, sol.certificate)


def test_free_variable_with_cost_is_unbounded():
    B, b = no_equalities(2)
    prob = SdpProblem(2, [1.0, 1.0], B, b, (scalar_block([1.0, 0.0], 0.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.DUAL_INFEASIBLE
    assert np.allclose(sol.certificate.x, [0.0, -1.0])


def test_inconsistent_equalities():
    B = sp.csr_matrix([[1.0], [1.0]])
    prob = SdpProblem(1, [0.0], B, [1.0, 2.0], (scalar_block([1.0], 0.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.PRIMAL_INFEASIBLE
    assert verify_certificate(prob, sol.certificate)


def test_presolve_drops_dependent_rows():
    B = sp.csr_matrix([[1.0, 1.0], [2.0, 2.0], [1.0, -1.0]])
    prob = SdpProblem(2, [0.0, 0.0], B, [1.0, 2.0, 0.0], ())
    assert presolve(prob).n_equalities == 2


def test_presolve_reports_inconsistency():
    B = sp.csr_matrix([[1.0, 1.0], [2.0, 2.0]])
    prob = SdpProblem(2, [0.0, 0.0], B, [1.0, 3.0], ())
    with pytest.raises(InconsistentEqualitiesError) as info:
        presolve(prob)
    ray = info.value.ray
    assert np.allclose(B.T @ ray, 0.0, atol=1e-10)
    assert np.isclose(ray @ np.array([1.0, 3.0]), -1.0)


def test_forged_certificate_is_rejected():
    B, b = no_equalities(1)
    prob = SdpProblem(1, [1.0], B, b, (scalar_block([1.0], -1.0),))
    forged = InfeasibilityCertificate("primal", np.zeros(0), (np.array([[1.0]]),))
    assert not verify_certificate(prob, forged)


def test_shape_validation():
    with pytest.raises(SdpProblemError):
        LmiBlock(2, sp.csr_matrix((3, 1)))
    with pytest.raises(SdpProblemError):
        SdpProblem(2, [1.0], sp.csr_matrix((0, 2)), [], ())
    with pytest.raises(SdpProblemError):
        SdpOptions(step=1.5)


def test_problem_without_variables():
    prob = SdpProblem(0, np.zeros(0), sp.csr_matrix((0, 0)), [], (LmiBlock(1, sp.csr_matrix((1, 0)), [[-1.0]]),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.PRIMAL_INFEASIBLE


def test_equality_nullspace_parametrizes_affine_set():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((3, 5))
    b = rng.standard_normal(3)
    x0, N = equality_nullspace(B, b)
    assert np.allclose(B @ x0, b, atol=1e-12)
    assert N.shape == (5, 2)
    assert np.allclose(B @ N, 0.0, atol=1e-12)
    assert np.allclose(N.T @ N, np.eye(2), atol=1e-12)


def test_equality_nullspace_without_rows():
    x0, N = equality_nullspace(np.zeros((0, 3)), np.zeros(0))
    assert N is None
    assert np.array_equal(x0, np.zeros(3))


def test_dependent_equalities_are_presolved():
    # вторая строка = 2 * первая
    B = sp.csr_matrix([[1.0, 2.0], [2.0, 4.0]])
    blocks = (scalar_block([1.0, 0.0], 0.0), scalar_block([0.0, 1.0], 0.0))
    sol = solve_sdp(SdpProblem(2, [1.0, 1.0], B, [4.0, 8.0], blocks))
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, 2.0, atol=1e-6)
    assert np.allclose(sol.x, [0.0, 2.0], atol=1e-5)
    assert np.allclose(B @ sol.x, [4.0, 8.0], atol=1e-10)


def test_equalities_hold_exactly():
    # x1 + x2 + x3 = 1, [[x1, x2], [x2, x3]] >= 0, min x2
    operator = sp.csr_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    block = LmiBlock(2, operator, np.zeros((2, 2)), "psd")
    B = sp.csr_matrix([[1.0, 1.0, 1.0]])
    sol = solve_sdp(SdpProblem(3, [0.0, 1.0, 0.0], B, [1.0], (block,)))
    assert sol.status is SdpStatus.OPTIMAL
    # x2^2 <= x1 x3 и x1 + x3 = 1 - x2: минимум x = (1, -1, 1)
    assert np.isclose(sol.objective, -1.0, atol=1e-6)
    assert np.allclose(sol.x, [1.0, -1.0, 1.0], atol=1e-5)
    assert np.isclose(sol.x.sum(), 1.0, atol=1e-12)
    assert sol.objective >= sol.dual_objective - 1e-6


def test_fixed_point_inside_cone():
    B = sp.csr_matrix([[1.0]])
    prob = SdpProblem(1, [2.0], B, [3.0], (scalar_block([1.0], -1.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.OPTIMAL
    assert np.isclose(sol.objective, 6.0)
    assert np.allclose(sol.x, [3.0])


def test_fixed_point_outside_cone():
    B = sp.csr_matrix([[1.0]])
    prob = SdpProblem(1, [1.0], B, [0.5], (scalar_block([1.0], -1.0),))
    sol = solve_sdp(prob)
    assert sol.status is SdpStatus.PRIMAL_INFEASIBLE
    assert verify_certificate(prob, sol.certificate)
