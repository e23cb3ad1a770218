import asyncio
import math
from itertools import combinations, combinations_with_replacement

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from core_lagrange_presets import PresetKind, preset
from core_polynomial import Block, VarSpace, parse_poly
from processor_pop_solver import PopStatus, dedup_points, solve_pop
from processor_saddle_pipeline import (
    BOUND_LIMIT,
    SaddleOptions,
    SaddlePointPipeline,
    SaddleProblem,
    SaddleSetupError,
    SaddleStatus,
    _sample_check,
    build_lower_max,
    build_lower_min,
    build_upper_pop,
    iteration_bound,
    problem_bound,
    solve_saddle,
    verify_saddle,
    with_options,
)


def saddle_problem(F, n=1, m=1, x_kind=PresetKind.BALL, y_kind=PresetKind.BALL, **options):
    space = VarSpace(n, m)
    sp = SaddleProblem(parse_poly(F, space), preset(x_kind, Block.X, n), preset(y_kind, Block.Y, m), label="t")
    return with_options(sp, **options) if options else sp


def brute_force_bound(a, b, n, m):
    """Сумма произведений по всем (I, J) и мультимножествам степени n+m-|I|-|J|"""
    total = 0
    for r1 in range(min(n, len(a) - 1) + 1):
        for I in combinations(a[1:], r1):
            for r2 in range(min(m, len(b) - 1) + 1):
                for J in combinations(b[1:], r2):
                    pool = (a[0] + b[0],) + I + J
                    h = sum(math.prod(c) for c in combinations_with_replacement(pool, n + m - r1 - r2))
                    total += math.prod(I) * math.prod(J) * h
    return total


# ━━━ оценка числа итераций ━━━


def test_bound_small_case_by_hand():
    # (a0+b0)^2 + a1(a0+b0+a1) + b1(a0+b0+b1) + a1*b1 = 16 + 12 + 12 + 4
    assert iteration_bound((2, 2), (2, 2), 1, 1).value == 44


@settings(max_examples=20, deadline=None)
@given(
    st.lists(st.integers(1, 3), min_size=1, max_size=4),
    st.lists(st.integers(1, 3), min_size=1, max_size=4),
    st.integers(1, 3),
    st.integers(1, 3),
)
def test_bound_matches_brute_force(a, b, n, m):
    bound = iteration_bound(a, b, n, m)
    assert not bound.saturated
    assert bound.value == brute_force_bound(tuple(a), tuple(b), n, m)


def test_bound_saturates():
    bound = iteration_bound((50,) * 11, (50,) * 11, 10, 10)
    assert bound.saturated
    assert bound.value == BOUND_LIMIT


def test_bound_rejects_zero_degree():
    with pytest.raises(SaddleSetupError):
        iteration_bound((0, 1), (1,), 1, 1)


def test_problem_bound_uses_block_degrees():
    sp = saddle_problem("x1^3*y1 + y1^2", x_kind=PresetKind.BOX_UNIT, y_kind=PresetKind.BALL)
    bound = problem_bound(sp)
    assert bound.a_degrees == (3, 1, 1)
    assert bound.b_degrees == (2, 2)


# ━━━ построение задач ━━━


def test_problem_validation():
    space = VarSpace(1, 1)
    F = parse_poly("x1*y1", space)
    with pytest.raises(SaddleSetupError):
        SaddleProblem(F, preset(PresetKind.BALL, Block.Y, 1), preset(PresetKind.BALL, Block.Y, 1))
    with pytest.raises(SaddleSetupError):
        SaddleProblem(F, preset(PresetKind.BALL, Block.X, 2), preset(PresetKind.BALL, Block.Y, 1))
    with pytest.raises(SaddleSetupError):
        SaddleProblem(parse_poly("x1", VarSpace(1, 0)), preset(PresetKind.BALL, Block.X, 1),
                      preset(PresetKind.FREE, Block.Y, 0))


def test_free_blocks_give_plain_gradient():
    sp = saddle_problem("x1^2 - y1^2 + x1*y1", x_kind=PresetKind.FREE, y_kind=PresetKind.FREE)
    pop = build_upper_pop(sp)
    space = sp.F.space
    assert pop.inequalities == ()
    assert len(pop.equalities) == 2
    assert pop.equalities[0] == parse_poly("2*x1 + y1", space)
    assert pop.equalities[1] == parse_poly("x1 - 2*y1", space)


def test_upper_constraints_vanish_at_saddle():
    sp = saddle_problem("x1^2 - y1^2")
    pop = build_upper_pop(sp)
    origin = np.zeros(2)
    assert all(abs(phi.evaluate(origin)) < 1e-12 for phi in pop.equalities)
    assert all(psi.evaluate(origin) >= 0 for psi in pop.inequalities)
    # g и знак множителя для каждого блока
    assert len(pop.inequalities) == 4


def test_simplex_stationarity_is_identically_satisfied():
    F = "x1*x2 + x2*x3 + x3*y1 + x1*y3 + y1*y2 + y2*y3"
    sp = saddle_problem(F, 3, 3, PresetKind.SIMPLEX, PresetKind.SIMPLEX)
    pop = build_upper_pop(sp)
    # остаются равенство симплекса и lambda_i * x_i для каждого блока
    assert len(pop.equalities) == 2 * (1 + 3)
    assert len(pop.inequalities) == 2 * (3 + 3)


def test_exclusion_sets_add_inequalities():
    sp = saddle_problem("x1^2 - y1^2 + x1*y1")
    base = build_upper_pop(sp)
    u, v = np.array([0.5]), np.array([-0.25])
    grown = build_upper_pop(sp, [u], [v])
    assert len(grown.inequalities) == len(base.inequalities) + 2
    z = np.array([0.1, 0.2])
    F = sp.F
    assert np.isclose(grown.inequalities[-2].evaluate(z), F.evaluate([0.5, 0.2]) - F.evaluate(z))
    assert np.isclose(grown.inequalities[-1].evaluate(z), F.evaluate(z) - F.evaluate([0.1, -0.25]))


def test_lower_min_on_ball():
    sp = saddle_problem("x1*y1")
    pop = build_lower_min(sp, [1.0])
    assert pop.space == VarSpace(1, 0)
    result = solve_pop(pop)
    assert result.status is PopStatus.OPTIMAL
    assert np.isclose(result.value, -1.0, atol=1e-6)
    assert np.allclose(result.points[0], [-1.0], atol=1e-5)


def test_lower_max_on_ball():
    sp = saddle_problem("x1*y1")
    pop = build_lower_max(sp, [1.0])
    assert pop.space == VarSpace(0, 1)
    result = solve_pop(pop)
    assert result.status is PopStatus.OPTIMAL
    assert np.isclose(-result.value, 1.0, atol=1e-6)
    assert np.allclose(result.points[0], [1.0], atol=1e-5)


# ━━━ опции и проверка ━━━


def test_with_options_routes_fields():
    sp = saddle_problem("x1*y1", rank_tol=1e-5, max_outer_iters=3, seed=7, ball_radius=2.0)
    assert sp.options.pop.rank_tol == 1e-5
    assert sp.options.max_outer_iters == 3
    assert sp.options.seed == 7
    assert sp.options.ball_radius == 2.0
    assert SaddleOptions().match_tol(-3.0) == SaddleOptions().tol_match * 4.0


def test_sample_check_detects_violation():
    sp = saddle_problem("x1^2 - y1^2", sample_count=500)
    assert _sample_check(sp, np.zeros(1), np.zeros(1), 0).passed
    check = _sample_check(sp, np.array([0.5]), np.zeros(1), 0)
    assert not check.passed
    assert check.worst_x is not None
    assert abs(check.worst_x[0]) < 0.5


def test_verify_saddle():
    sp = saddle_problem("x1^2 - y1^2", sample_count=500)
    assert verify_saddle(sp, [0.0], [0.0])
    assert not verify_saddle(sp, [0.5], [0.0])
    assert not verify_saddle(sp, [2.0], [0.0])


# ━━━ внешний цикл ━━━


def test_convex_concave_saddle():
    sp = saddle_problem("x1^2 - y1^2", sample_count=500)
    result = solve_saddle(sp)
    assert result.status is SaddleStatus.SADDLE_POINTS
    assert result.iterations == 1
    (point,) = result.points
    assert np.allclose(point.x, [0.0], atol=1e-5)
    assert np.allclose(point.y, [0.0], atol=1e-5)
    assert abs(point.value) < 1e-8
    assert result.bound is not None
    assert result.records[0].checks[0].verdict == "saddle"


def test_interior_saddle_on_box():
    # строго выпукло-вогнутая F: седло - единственная стационарная точка внутри [0,1]^2
    sp = saddle_problem("(x1 - 0.3)^2 - (y1 - 0.6)^2 + 0.5*x1*y1", x_kind=PresetKind.BOX_UNIT,
                        y_kind=PresetKind.BOX_UNIT, sample_count=500)
    y_star = 0.675 / 1.0625
    x_star = 0.3 - 0.25 * y_star
    result = solve_saddle(sp)
    assert result.status is SaddleStatus.SADDLE_POINTS
    (point,) = result.points
    assert np.allclose(point.x, [x_star], atol=1e-5)
    assert np.allclose(point.y, [y_star], atol=1e-5)
    assert np.isclose(point.value, sp.F.evaluate([x_star, y_star]), atol=1e-6)
    assert verify_saddle(sp, point.x, point.y)


def test_iteration_cap_from_options():
    sp = saddle_problem("x1^2 - y1^2", max_outer_iters=1, sample_count=100)
    result = solve_saddle(sp)
    assert result.iterations <= 1


# ━━━ симплекс x симплекс: континуумы минимизаторов ━━━

SIMPLEX_F = "x1*x2 + x2*x3 + x3*y1 + x1*y3 + y1*y2 + y2*y3"


def simplex_problem():
    return saddle_problem(SIMPLEX_F, 3, 3, PresetKind.SIMPLEX, PresetKind.SIMPLEX, sample_count=500)


def test_simplex_lower_min_has_unique_minimizer():
    result = solve_pop(build_lower_min(simplex_problem(), [0.25, 0.5, 0.25]))
    assert result.status is PopStatus.OPTIMAL, result.message
    assert np.isclose(result.value, 0.25, atol=1e-6)
    assert np.allclose(result.points[0], [0.0, 1.0, 0.0], atol=1e-4)


def test_simplex_lower_max_over_segment():
    # F(e2, y) = y2 (1 - y2): максимумы - весь отрезок y2 = 1/2
    sp = simplex_problem()
    result = solve_pop(build_lower_max(sp, [0.0, 1.0, 0.0]))
    assert result.status is PopStatus.OPTIMAL, result.message
    assert np.isclose(-result.value, 0.25, atol=1e-6)
    for y in result.points:
        assert np.isclose(y[1], 0.5, atol=1e-4)
        assert np.isclose(sp.F.evaluate(np.concatenate([[0.0, 1.0, 0.0], y])), 0.25, atol=1e-5)


def test_simplex_upper_pop_is_solved():
    sp = simplex_problem()
    result = solve_pop(build_upper_pop(sp))
    assert result.status is PopStatus.OPTIMAL, result.message
    assert np.isclose(result.value, 0.25, atol=1e-6)
    for point in result.points:
        assert np.isclose(sp.F.evaluate(point), 0.25, atol=1e-5)


# ━━━ исключение кандидатов ━━━


def test_exclusion_loop_is_sound():
    # седла (+-1, +-1) со значением 0; первая итерация даёт (+-1, 0) и пополняет K2
    sp = saddle_problem("y1^2 - x1^2", x_kind=PresetKind.HYPERCUBE_PM1, y_kind=PresetKind.HYPERCUBE_PM1,
                        sample_count=500)
    pipeline = SaddlePointPipeline(sp)
    result = asyncio.run(pipeline.run())

    assert result.status is SaddleStatus.SADDLE_POINTS, result.reason
    assert result.iterations == 2
    first = result.records[0]
    assert first.k1_added == 0 and first.k2_added == 2
    assert {check.verdict for check in first.checks} == {"max"}

    # K1 и K2 без повторов
    for target in (pipeline.K1, pipeline.K2):
        assert len(dedup_points(target)) == len(target)
    assert sorted(float(v[0]) for v in pipeline.K2) == pytest.approx([-1.0, 1.0], abs=1e-4)

    # добавленные неравенства не отсекают ни одного настоящего седла
    F = sp.F
    saddles = [np.array([sx, sy]) for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)]
    grown = build_upper_pop(sp, pipeline.K1, pipeline.K2)
    for z in saddles:
        assert all(psi.evaluate(z) >= -1e-6 for psi in grown.inequalities)
        for v in pipeline.K2:
            assert F.evaluate([z[0], v[0]]) <= F.evaluate(z) + 1e-6

    assert len(result.points) == 4
    for point in result.points:
        assert np.allclose(np.abs(point.x), 1.0, atol=1e-4)
        assert np.allclose(np.abs(point.y), 1.0, atol=1e-4)
        assert verify_saddle(sp, point.x, point.y)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4), st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4))
def test_exclusion_inequalities_keep_saddles(us, vs):
    # для седла (0, 0) функции x^2 - y^2 любое u даёт F(u, 0) >= F(0, 0) и любое v - F(0, v) <= F(0, 0)
    sp = saddle_problem("x1^2 - y1^2")
    K1 = [np.array([u]) for u in us]
    K2 = [np.array([v]) for v in vs]
    base = build_upper_pop(sp)
    grown = build_upper_pop(sp, K1, K2)
    added = grown.inequalities[len(base.inequalities):]
    assert len(added) == len(K1) + len(K2)
    origin = np.zeros(2)
    assert all(psi.evaluate(origin) >= -1e-12 for psi in added)
