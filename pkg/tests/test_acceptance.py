"""End-to-end properties of the eigencurve toolkit on the shipped regimes."""
import math

import numpy as np
import pytest

from backend.commands import observed_orders, scalar_oracle
from backend.config import context_for
from backend.curve import (CaseTag, H_maps, branch_value, contains, trace_curve, vertical_crossings,
                           vertical_roots)
from backend.eigen import principal_eigenpair
from backend.geometry import uniform_submesh
from backend.logistic import LogisticProblem, existence_map, solve, TOL_MARGIN
from backend.operator import Boundary, assemble_scalar
from backend.spectral_maps import degenerate_limit, degenerate_sequence, eval_F
from backend.verification import (check_bounds, check_concavity, check_derivative_signs, check_oracle,
                                  check_origin, check_shift_identity)
from tests.conftest import load, make_context


pytestmark = pytest.mark.slow

REGIMES = ['both_nonneg', 'mixed_neg', 'both_sign']
N_RAYS = 128


@pytest.fixture(scope='module')
def contexts():
    return {name: context_for(load(name)) for name in REGIMES}


@pytest.fixture(scope='module')
def traces(contexts):
    return {name: trace_curve(ctx, n_rays=N_RAYS) for name, ctx in contexts.items()}


@pytest.mark.parametrize('n, radial_power', [(8, 0), (32, 0), (64, 2)])
def test_exactness_at_origin(n, radial_power):
    ctx = make_context("x - 0.2", "sin(3*x)", gamma1=0.3, gamma2=2.0, n1=n, n2=n, xs=0.4,
                       radial_power=radial_power)
    assert check_origin(ctx).passed


def test_shift_identity(flat_mesh):
    assert check_shift_identity(flat_mesh, 1.0, 1.0).passed
    assert check_shift_identity(flat_mesh, 0.2, 3.0).passed


def test_oracle_equivalence(flat_mesh):
    check = check_oracle(flat_mesh, np.random.default_rng(2024), 20)
    assert check.passed and check.samples == 40


def test_robin_neumann_convergence_order():
    sizes = [32, 64, 128, 256]
    left, right = Boundary.neumann(), Boundary.robin(1.0)
    exact = scalar_oracle(0.5, left, right, potential=0.5)
    values = [principal_eigenpair(assemble_scalar(uniform_submesh(0.0, 0.5, n), 0.5, left, right)).value
              for n in sizes]
    orders = observed_orders(values, sizes, exact)[1:]
    assert all(abs(order - 2.0) <= 0.2 for order in orders)


def test_upper_bounds(contexts):
    rng = np.random.default_rng(5)
    for ctx in contexts.values():
        for check in check_bounds(ctx, rng, 50):
            assert check.passed, check.detail


def test_concavity_and_two_roots(contexts, traces):
    rng = np.random.default_rng(6)
    for name, ctx in contexts.items():
        assert check_concavity(ctx, rng, 100).passed
        trace = traces[name]
        for lam1 in np.linspace(trace.lam1.min(), trace.lam1.max(), 15):
            assert vertical_crossings(trace, lam1) <= 2
            assert len(vertical_roots(lam1, ctx)) <= 2


def test_both_nonneg_regime(contexts, traces):
    ctx, trace = contexts['both_nonneg'], traces['both_nonneg']
    assert trace.case_tag == CaseTag.BOTH_NONNEG
    assert H_maps(trace).branches['H'].monotone_ok
    assert abs(branch_value(ctx, 0.0)) <= 1e-6
    assert abs(branch_value(ctx, -50.0) - ctx.roots2.plus) <= 5e-3
    beyond = ctx.roots1.plus + 0.1
    assert all(eval_F(beyond, lam2, ctx) < 0 for lam2 in np.linspace(-100.0, 100.0, 21))


@pytest.mark.parametrize('name, bar_sign', [('mixed_neg', 1), ('mixed_pos', -1), ('mixed_zero', 0)])
def test_mixed_regime(name, bar_sign):
    ctx = context_for(load(name))
    trace = trace_curve(ctx, n_rays=N_RAYS)
    marks = trace.landmarks
    assert trace.case_tag == CaseTag.MIXED and not trace.closed
    if bar_sign == 0:
        assert abs(marks.lambda1_max) <= 1e-4 and abs(marks.lambda2_bar) <= 1e-4
    else:
        assert marks.lambda1_max > 0
        assert math.copysign(1.0, marks.lambda2_bar) == bar_sign
    assert abs(branch_value(ctx, -100.0, 'H+') - ctx.roots2.plus) <= 1e-2
    assert abs(branch_value(ctx, -100.0, 'H-') - ctx.roots2.minus) <= 1e-2


def test_both_sign_regime(contexts, traces):
    ctx, trace = contexts['both_sign'], traces['both_sign']
    marks = trace.landmarks
    assert trace.closed and not trace.unbounded_angles
    first, last = trace.points[1], trace.points[-2]
    extent = max(np.ptp(trace.lam1), np.ptp(trace.lam2))
    assert math.hypot(first.lam1, first.lam2) <= 0.05 * extent
    assert math.hypot(last.lam1, last.lam2) <= 0.05 * extent
    assert trace.points[0].origin and trace.points[0].residual <= 1e-6

    assert ctx.int1 < 0 and ctx.int2 < 0
    assert marks.lambda1_min < 0 < marks.lambda1_max
    inside = (0.5 * marks.lambda1_max, 0.5 * marks.lambda2_bar)
    assert contains(trace, *inside) and eval_F(*inside, ctx) > 0
    outside = (marks.lambda1_max + 1.0, marks.lambda2_bar)
    assert not contains(trace, *outside) and eval_F(*outside, ctx) < 0


def test_derivative_signs():
    rng = np.random.default_rng(10)
    weights = [(2.0, 1.0), (1.0, "4*(x - 0.8)"), (1.0, "4*(x - 0.7)"), ("4*(x - 0.3)", 1.0),
               ("2*(0.2 - x)", "2*(x - 0.8)")]
    for m1, m2 in weights:
        ctx = make_context(m1, m2, gamma1=0.5, gamma2=1.5, n1=32, n2=32)
        check = check_derivative_signs(ctx, rng, 20)
        assert check.passed, check.detail


def test_degenerate_limit(caplog):
    ctx = context_for(load('degenerate'))
    with caplog.at_level('WARNING', logger='spectral_maps'):
        seq = degenerate_sequence(ctx, 0.0)
    assert seq.limit == degenerate_limit(ctx, 0.0)
    # A non-monotone approach is flagged in the log
    assert seq.monotone or 'monotonically' in caplog.text
    assert seq.distances[-1] <= 5e-3


@pytest.mark.parametrize('name', REGIMES)
def test_logistic_criterion(name):
    config = load(name)
    ctx = context_for(config)
    block = config.logistic
    rows = existence_map(ctx, np.linspace(*block.lam1, 11), np.linspace(*block.lam2, 11), block.p1, block.p2)
    assert len(rows) == 121
    for row in rows:
        if row.F < -TOL_MARGIN:
            assert row.exists == 'true' and row.sup_u > 0
        elif row.F > TOL_MARGIN:
            assert row.exists == 'false' and row.sup_u <= 1e-6
        else:
            assert row.exists == 'indeterminate'

    nearest = max((r for r in rows if r.exists == 'true'), key=lambda r: r.F)
    solution = solve(LogisticProblem(ctx=ctx, lam1=nearest.lam1, lam2=nearest.lam2, p1=block.p1, p2=block.p2))
    assert solution.gap <= 1e-8
    assert np.all(solution.u > 0)


def test_homogeneous_constant_solution():
    ctx = make_context(1.0, 1.0, gamma1=0.7, gamma2=0.7, n1=48, n2=48)
    solution = solve(LogisticProblem(ctx=ctx, lam1=2.5, lam2=2.5), tol_uniq=1e-10)
    np.testing.assert_allclose(solution.u, 2.5, atol=1e-9)
