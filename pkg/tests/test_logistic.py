import numpy as np
import pytest

from backend.errors import Indeterminate, NonConvergence, NotSubcritical
from backend.logistic import (LogisticProblem, bracket, decay_run, existence_check, existence_map,
                              linearized_eigenvalue, nonlinear_residual, solve)


@pytest.fixture(scope='module')
def inside(nonneg_ctx):
    return LogisticProblem(ctx=nonneg_ctx, lam1=10.0, lam2=10.0)


@pytest.fixture(scope='module')
def inside_solution(inside):
    return solve(inside)


def test_constant_solution(ones_ctx):
    # m = 1, equal couplings, p = 2: u ≡ λ solves the problem on both membranes
    prob = LogisticProblem(ctx=ones_ctx, lam1=3.0, lam2=3.0)
    solution = solve(prob)
    np.testing.assert_allclose(solution.u, 3.0, atol=1e-8)
    assert solution.gap <= 1e-8


def test_bracket_orders_sub_and_supersolution(inside):
    br = bracket(inside)
    op = inside.operator()
    p = inside.exponents
    assert br.F < 0 and 0 < br.epsilon <= br.K
    assert np.all(nonlinear_residual(op, br.epsilon * br.phi, p) <= 1e-10)
    assert np.all(nonlinear_residual(op, np.full(op.size, br.K), p) >= -1e-10)


def test_solution_is_sandwiched(inside_solution, inside):
    solution = inside_solution
    assert solution.gap <= 1e-8
    assert np.all(solution.upward <= solution.u + 1e-12)
    assert np.all(solution.u <= solution.downward + 1e-12)
    assert np.all(solution.u > 0)
    assert abs(linearized_eigenvalue(inside, solution)) <= 1e-6


def test_existence_check(nonneg_ctx):
    with pytest.raises(Indeterminate):
        existence_check(LogisticProblem(ctx=nonneg_ctx, lam1=0.0, lam2=0.0))
    assert existence_check(LogisticProblem(ctx=nonneg_ctx, lam1=10.0, lam2=10.0))
    assert not existence_check(LogisticProblem(ctx=nonneg_ctx, lam1=-5.0, lam2=-5.0))


def test_supercritical_points_have_no_solution(nonneg_ctx):
    prob = LogisticProblem(ctx=nonneg_ctx, lam1=-5.0, lam2=-5.0)
    with pytest.raises(NotSubcritical):
        bracket(prob)
    with pytest.raises(NotSubcritical):
        solve(prob)

    history = decay_run(prob)
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
    assert history[-1] < 1e-3 * history[0]


def test_iteration_budget(inside):
    with pytest.raises(NonConvergence):
        solve(inside, max_iter=1)


def test_exponent_must_exceed_one(nonneg_ctx):
    with pytest.raises(ValueError):
        LogisticProblem(ctx=nonneg_ctx, lam1=1.0, lam2=1.0, p1=1.0)


def test_existence_map(nonneg_ctx):
    rows = existence_map(nonneg_ctx, [-5.0, 10.0], [-5.0, 0.0, 10.0])
    assert len(rows) == 6
    for row in rows:
        if row.lam1 == 0.0 and row.lam2 == 0.0:
            assert row.exists == 'indeterminate'
        elif row.F < 0:
            assert row.exists == 'true' and row.sup_u > 0
        else:
            assert row.exists == 'false'
    assert {r.exists for r in rows} == {'true', 'false'}
