import itertools

import numpy as np
import pytest

import backend.verification as verification
from backend.verification import (check_bounds, check_branch_limit, check_lipschitz, check_monotonicity,
                                  check_oracle, check_robin_below_dirichlet, check_supersolution, coarse_config,
                                  result, run_suite)
from tests.conftest import load


CHECKS = ['origin', 'shift_identity', 'oracle_agreement', 'bound_scalar_min', 'bound_constant_test',
          'midpoint_concavity', 'derivative_signs', 'gradient_at_origin', 'scalar_roots', 'root_box',
          'robin_below_dirichlet', 'monotonicity', 'lipschitz', 'supersolution', 'branch_limit']


def test_result_margins():
    ok = result('demo', [1.0, 5e-7], thin=1e-6, labels=['a', 'b'])
    assert ok.passed and ok.worst == 5e-7
    assert ok.warnings == ['demo: thin margin 5.000e-07 at b']
    assert not result('demo', [1.0, -1e-3]).passed
    assert result('empty', []).passed


def test_coarse_config_divides_the_mesh():
    config = coarse_config(load('both_nonneg'))
    assert (config.domain.n1, config.domain.n2) == (16, 16)


@pytest.mark.parametrize('name', ['both_nonneg', 'mixed_neg', 'both_sign'])
def test_suite_passes_on_coarse_meshes(name):
    report = run_suite(load(name, seed=11), coarse=True)
    assert [c.name for c in report.checks] == CHECKS
    failed = [(c.name, c.worst, c.detail) for c in report.checks if not c.passed]
    assert not failed
    assert report.coarse and len(report.rows()) == len(CHECKS)


def test_suite_is_seeded():
    config = load('mixed_neg', seed=2)
    first = run_suite(config, coarse=True)
    second = run_suite(config, coarse=True)
    assert [c.worst for c in first.checks] == [c.worst for c in second.checks]


def test_individual_checks(both_sign_ctx, flat_mesh):
    rng = np.random.default_rng(0)
    assert check_oracle(flat_mesh, rng, 3).passed
    assert all(c.passed for c in check_bounds(both_sign_ctx, rng, 5))
    assert check_robin_below_dirichlet(both_sign_ctx, rng, 5).passed


def test_potential_order_checks(mixed_neg_ctx, both_sign_ctx):
    rng = np.random.default_rng(4)
    for ctx in (mixed_neg_ctx, both_sign_ctx):
        for check in (check_monotonicity, check_lipschitz, check_supersolution):
            outcome = check(ctx, rng, 4)
            assert outcome.passed, (outcome.name, outcome.worst)
            assert outcome.samples >= 4


def test_monotonicity_detects_a_decreasing_eigenvalue(monkeypatch, mixed_neg_ctx):
    monkeypatch.setattr(verification, 'principal_value', lambda ctx, c: -float(np.sum(c)))
    outcome = check_monotonicity(mixed_neg_ctx, np.random.default_rng(0), 3)
    assert not outcome.passed and outcome.worst < 0


def test_lipschitz_detects_a_steep_eigenvalue(monkeypatch, mixed_neg_ctx):
    values = itertools.cycle([10.0, 0.0])
    monkeypatch.setattr(verification, 'principal_value', lambda ctx, c: next(values))
    assert not check_lipschitz(mixed_neg_ctx, np.random.default_rng(0), 3).passed


def test_branch_limit(nonneg_ctx, mixed_neg_ctx):
    outcome = check_branch_limit(nonneg_ctx)
    assert outcome.passed and outcome.samples == 4
    assert not outcome.warnings
    assert check_branch_limit(mixed_neg_ctx).detail == 'not applicable'


def test_branch_limit_only_warns(monkeypatch, nonneg_ctx):
    monkeypatch.setattr(verification, 'branch_value', lambda ctx, lam1: lam1)
    outcome = check_branch_limit(nonneg_ctx)
    assert outcome.passed
    assert len(outcome.warnings) == 3 and outcome.worst < 0
