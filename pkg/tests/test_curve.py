import math

import numpy as np
import pytest

from backend.curve import (CaseTag, H_maps, branch_value, classify, contains, gradient_at_origin, h1_of_mu,
                           h2_of_mu, lambda1_extremes, lambda2_extremes, lambda2_star, numerical_gradient, root_on_ray,
                           sweep_angles, trace_curve, vertical_crossings, vertical_roots)
from backend.spectral_maps import eval_F, mu_star
from tests.conftest import make_context


TOL_CURVE = 1e-6


@pytest.fixture(scope='module')
def nonneg_trace(nonneg_ctx):
    return trace_curve(nonneg_ctx, n_rays=64, refine_rounds=2)


@pytest.fixture(scope='module')
def closed_trace(both_sign_ctx):
    return trace_curve(both_sign_ctx, n_rays=64, refine_rounds=2)


def test_classification_per_regime():
    cls = classify(make_context(2.0, 1.0, n1=16, n2=16))
    assert (cls.case_tag, cls.closed, cls.monotone) == (CaseTag.BOTH_NONNEG, False, 'decreasing')

    cls = classify(make_context(1.0, "4*(x - 0.8)", n1=16, n2=16))
    assert (cls.case_tag, cls.sub_tag) == (CaseTag.MIXED, 'neg')
    assert cls.predictions == {'lambda1_max': '>0', 'lambda2_bar': '>0'}
    assert classify(make_context(1.0, "4*(x - 0.7)", n1=16, n2=16)).predictions['lambda2_bar'] == '<0'
    assert classify(make_context(1.0, "4*(x - 0.75)", n1=16, n2=16)).predictions['lambda1_max'] == '=0'

    cls = classify(make_context("4*(x - 0.3)", 1.0, n1=16, n2=16))
    assert cls.case_tag == CaseTag.MIRRORED
    cls = classify(make_context("2*(0.2 - x)", "2*(x - 0.8)", n1=16, n2=16))
    assert (cls.case_tag, cls.closed) == (CaseTag.BOTH_SIGN, True)


def test_gradient_at_origin(mixed_neg_ctx):
    np.testing.assert_allclose(gradient_at_origin(mixed_neg_ctx), numerical_gradient(mixed_neg_ctx), atol=1e-6)


def test_rays_on_the_shift_identity(ones_ctx):
    sample = root_on_ray(3 * math.pi / 4 + 0.1, ones_ctx)
    assert sample.status == 'hit' and sample.r > 0
    assert abs(eval_F(sample.lam1, sample.lam2, ones_ctx)) <= TOL_CURVE
    # F(λ, λ) = -λ: no root up the diagonal, unbounded growth down it
    assert root_on_ray(math.pi / 4, ones_ctx).status == 'skipped'
    assert root_on_ray(5 * math.pi / 4, ones_ctx).status == 'unbounded'


def test_tangent_slope_gives_origin(nonneg_ctx):
    assert h1_of_mu(mu_star(nonneg_ctx), nonneg_ctx) == 0.0
    assert h2_of_mu(mu_star(nonneg_ctx), nonneg_ctx) == 0.0


def test_tangent_slope_on_radial_mesh():
    ctx = make_context(2.0, 1.0, gamma1=0.02, gamma2=1.0, n1=32, n2=32, radial_power=2)
    mu = mu_star(ctx)
    gradient = gradient_at_origin(ctx)
    assert abs(gradient @ (1.0, mu)) <= 1e-12 * float(np.linalg.norm(gradient)) * (1.0 + abs(mu))
    assert h1_of_mu(mu, ctx) == 0.0
    np.testing.assert_allclose(gradient, numerical_gradient(ctx), atol=1e-6)


def test_h_maps_of_slopes(nonneg_ctx):
    mu = mu_star(nonneg_ctx)
    assert h1_of_mu(0.5, nonneg_ctx) is None
    assert h1_of_mu(2 * mu, nonneg_ctx) > 0
    assert h1_of_mu(0.5 * mu, nonneg_ctx) < 0
    h2 = [h2_of_mu(m, nonneg_ctx) for m in (-50.0, -20.0, -5.0, -1.0, -0.1)]
    assert np.all(np.diff(h2) > 0)


def test_open_trace(nonneg_trace, nonneg_ctx):
    trace = nonneg_trace
    assert not trace.closed and trace.case_tag == CaseTag.BOTH_NONNEG
    assert trace.points[0].origin and trace.points[-1].origin
    assert max(p.residual for p in trace.points) <= TOL_CURVE
    hmaps = H_maps(trace)
    branch = hmaps.branches['H']
    assert branch.monotone_ok
    for lam1 in np.linspace(trace.lam1.min(), trace.lam1.max(), 7):
        assert vertical_crossings(trace, lam1) <= 2
    assert len(vertical_roots(-5.0, nonneg_ctx)) == 1


def test_closed_trace(closed_trace, both_sign_ctx):
    trace = closed_trace
    marks = trace.landmarks
    assert trace.closed and not trace.unbounded_angles
    assert marks.lambda1_min < 0 < marks.lambda1_max
    assert marks.lambda2_min < 0 < marks.lambda2_max

    inside = (0.5 * marks.lambda1_max, 0.5 * marks.lambda2_bar)
    assert contains(trace, *inside)
    assert eval_F(*inside, both_sign_ctx) > 0
    outside = (2 * marks.lambda1_max, 0.0)
    assert not contains(trace, *outside)
    assert eval_F(*outside, both_sign_ctx) < 0

    hmaps = H_maps(trace)
    assert set(hmaps.branches) == {'H+', 'H-'}


def test_lambda2_star(both_sign_ctx):
    star = lambda2_star(both_sign_ctx)
    assert star > 0
    assert abs(eval_F(0.0, star, both_sign_ctx)) <= 1e-8
    roots = vertical_roots(0.0, both_sign_ctx)
    assert len(roots) == 2 and min(abs(r) for r in roots) <= 1e-6


def test_sweep_contains_axis_directions():
    assert len(sweep_angles(64)) == 64
    angles = sweep_angles(66)
    assert len(angles) == 70
    assert {0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi} <= set(angles)


def test_trace_hits_the_vertical_axis_root(both_sign_ctx):
    trace = trace_curve(both_sign_ctx, n_rays=66, refine_rounds=0)
    on_axis = [p for p in trace.points if not p.origin and abs(p.lam1) <= 1e-9]
    assert on_axis
    assert any(p.lam2 == pytest.approx(lambda2_star(both_sign_ctx), abs=1e-5) for p in on_axis)


def mirrored_pair():
    mirrored = make_context("4*(x - 0.3)", 1.0, gamma1=0.5, gamma2=0.02, n1=32, n2=32)
    # Reflection x -> 1 - x exchanges the subdomains and the couplings
    swapped = make_context(1.0, "4*(0.7 - x)", gamma1=0.02, gamma2=0.5, n1=32, n2=32)
    return mirrored, swapped


@pytest.fixture(scope='module')
def mirrored_trace():
    return trace_curve(mirrored_pair()[0], n_rays=64, refine_rounds=2)


def test_mirrored_branches_are_graphs_over_lambda2(mirrored_trace):
    ctx = mirrored_pair()[0]
    hmaps = H_maps(mirrored_trace)
    assert set(hmaps.branches) == {'H+', 'H-'}
    for name, direction in (('H+', 'decreasing'), ('H-', 'increasing')):
        branch = hmaps.branches[name]
        assert branch.over == 'lambda2' and branch.monotone == direction and branch.monotone_ok
    level = mirrored_trace.landmarks.lambda2_max - 5.0
    assert branch_value(ctx, level, 'H+', over='lambda2') > branch_value(ctx, level, 'H-', over='lambda2')


def test_mirrored_curve_is_the_reflected_mixed_curve(mirrored_trace):
    mirrored, swapped = mirrored_pair()
    for a, b in ((0.0, 0.0), (3.0, -7.0), (-20.0, 4.0), (10.0, 10.0)):
        assert eval_F(a, b, mirrored) == pytest.approx(eval_F(b, a, swapped), abs=1e-8)
    for p in mirrored_trace.points:
        assert abs(eval_F(p.lam2, p.lam1, swapped)) <= 1e-5
    top = lambda2_extremes(mirrored)
    right = lambda1_extremes(swapped)
    assert top[2] == pytest.approx(right[2], abs=1e-5)
    assert top[3] == pytest.approx(right[3], abs=1e-5)
