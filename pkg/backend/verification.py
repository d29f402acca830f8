"""Property suite behind `main.py verify`.

Each check returns a CheckResult with the worst margin it saw; a negative
margin means the property failed. Margins that are nonnegative but thin are
listed as warnings (typical on a deliberately coarse mesh).
"""
import logging
import math

import numpy as np
from pydantic import BaseModel

from backend.config import RunConfig, context_for, mesh_for
from backend.eigen import dense_oracle, principal_eigenpair, rayleigh_minimum
from backend.fields import SignClass, constant_field
from backend.geometry import MIN_NODES, Mesh, build_mesh
from backend.operator import Boundary, assemble_interface
from backend.spectral_maps import (DERIVATIVE_STEP, DOUBLE_ROOT_TOL, ScalarMap, SpectralContext, build_context,
                                   central_difference, cota1, cota2, eval_F, eval_f_mu, eval_g, mu_star)
from backend.curve import branch_value, gradient_at_origin, numerical_gradient


logger = logging.getLogger('verification')

ORIGIN_TOL = 1e-10
SHIFT_TOL = 1e-9
ORACLE_TOL = 1e-8
BOUND_TOL = 1e-8
CONCAVITY_SLACK = 1e-9
DEAD_BAND = 1e-3
THIN_MARGIN = 1e-6
SHIFT_LAMBDAS = (-2.0, -1.0, 0.5, 1.0, 3.0)
POTENTIAL_RANGE = 5.0
STRICT_GAP = 1e-12
MONOTONE_TOL = 1e-9
BRANCH_LIMIT_STEPS = (0.5, 0.1, 0.01, 0.001)


class CheckResult(BaseModel):
    name: str
    passed: bool
    worst: float                # smallest margin observed
    samples: int
    detail: str = ''
    warnings: list[str] = []


class VerificationReport(BaseModel):
    seed: int
    coarse: bool
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def warnings(self) -> list[str]:
        return [w for c in self.checks for w in c.warnings]

    def rows(self) -> list[dict]:
        return [{'check': c.name, 'passed': c.passed, 'worst_margin': c.worst, 'samples': c.samples,
                 'warnings': len(c.warnings), 'detail': c.detail} for c in self.checks]


def result(name: str, margins: list[float], detail: str = '', thin: float | None = None,
           labels: list[str] | None = None) -> CheckResult:
    worst = min(margins) if margins else math.inf
    warnings = []
    if thin is not None:
        for i, m in enumerate(margins):
            if 0 <= m < thin:
                where = labels[i] if labels else str(i)
                warnings.append(f"{name}: thin margin {m:.3e} at {where}")
    return CheckResult(name=name, passed=worst >= 0, worst=worst, samples=len(margins), detail=detail,
                       warnings=warnings)


def parameter_scale(ctx: SpectralContext) -> float:
    finite = [abs(v) for v in (*ctx.big_lambda1, *ctx.big_lambda2) if v is not None and math.isfinite(v)]
    return min(max(finite, default=10.0), 50.0)


def check_origin(ctx: SpectralContext) -> CheckResult:
    eig = ctx.eigenpair(0.0, 0.0)
    margins = [ORIGIN_TOL - abs(eig.value), eig.positivity_margin - 0.99]
    return result('origin', margins, f"F(0,0)={eig.value:.3e}, positivity margin {eig.positivity_margin:.6f}")


def check_shift_identity(mesh: Mesh, gamma1: float, gamma2: float) -> CheckResult:
    ones = build_context(mesh, constant_field(1.0, mesh.part1, 1), constant_field(1.0, mesh.part2, 2),
                         gamma1, gamma2)
    margins = [SHIFT_TOL - abs(eval_F(lam, lam, ones) + lam) for lam in SHIFT_LAMBDAS]
    return result('shift_identity', margins, f"lambda in {SHIFT_LAMBDAS}")


def check_oracle(mesh: Mesh, rng: np.random.Generator, draws: int) -> CheckResult:
    small = build_mesh(mesh.spec.model_copy(update={"n1": 16, "n2": 16}))
    margins = []
    for _ in range(draws):
        gamma1, gamma2 = rng.uniform(0.2, 3.0, size=2)
        c1 = rng.uniform(-5.0, 5.0, size=len(small.nodes1))
        c2 = rng.uniform(-5.0, 5.0, size=len(small.nodes2))
        op = assemble_interface(small, c1, c2, gamma1, gamma2)
        value = principal_eigenpair(op).value
        scale = max(1.0, abs(value))
        margins.append(ORACLE_TOL * scale - abs(value - dense_oracle(op).principal_value))
        margins.append(ORACLE_TOL * scale - abs(value - rayleigh_minimum(op)))
    return result('oracle_agreement', margins, f"{draws} random potential pairs, n1=n2=16")


def check_bounds(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> list[CheckResult]:
    s = parameter_scale(ctx)
    margins1, margins2, labels = [], [], []
    for _ in range(draws):
        lam1, lam2 = rng.uniform(-s, s, size=2)
        F = eval_F(lam1, lam2, ctx)
        margins1.append(cota1(lam1, lam2, ctx) - F + BOUND_TOL)
        margins2.append(cota2(lam1, lam2, ctx) - F + BOUND_TOL)
        labels.append(f"({lam1:.4g}, {lam2:.4g})")
    detail = f"{draws} draws in [-{s:g}, {s:g}]^2"
    return [result('bound_scalar_min', margins1, detail, THIN_MARGIN + BOUND_TOL, labels),
            result('bound_constant_test', margins2, detail, THIN_MARGIN + BOUND_TOL, labels)]


def check_concavity(ctx: SpectralContext, rng: np.random.Generator, segments: int) -> CheckResult:
    s = parameter_scale(ctx)
    margins = []
    for _ in range(segments):
        p, q = rng.uniform(-s, s, size=2), rng.uniform(-s, s, size=2)
        mid = 0.5 * (p + q)
        fp, fq, fm = eval_F(*p, ctx), eval_F(*q, ctx), eval_F(*mid, ctx)
        margins.append(fm - 0.5 * (fp + fq) + CONCAVITY_SLACK * max(1.0, abs(fp), abs(fq)))
    return result('midpoint_concavity', margins, f"{segments} random segments")


def derivative_step(ctx: SpectralContext) -> float:
    return DERIVATIVE_STEP / max(1.0, ctx.m1.sup_norm, ctx.m2.sup_norm)


def check_derivative_signs(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    step = derivative_step(ctx)
    margins, skipped = [], 0
    expected = -ctx.int2
    if abs(expected) > DEAD_BAND:
        slope = central_difference(lambda y: eval_g(y, ctx), 0.0, step)
        margins.append(slope * math.copysign(1.0, expected))
    else:
        skipped += 1
    for mu in rng.uniform(-5.0, 5.0, size=draws):
        expected = -(ctx.gamma2 * ctx.int1 + mu * ctx.gamma1 * ctx.int2)
        if abs(expected) <= DEAD_BAND:
            skipped += 1
            continue
        slope = central_difference(lambda x: eval_f_mu(mu, x, ctx), 0.0, step)
        margins.append(slope * math.copysign(1.0, expected))
    return result('derivative_signs', margins, f"{skipped} samples inside the dead band")


def check_gradient(ctx: SpectralContext) -> CheckResult:
    analytic = gradient_at_origin(ctx)
    numeric = numerical_gradient(ctx, derivative_step(ctx))
    error = float(np.max(np.abs(analytic - numeric)))
    margins = [1e-6 * max(1.0, float(np.max(np.abs(analytic)))) - error]
    mu = mu_star(ctx)
    detail = f"gradient error {error:.2e}"
    if mu is not None:
        tangent = abs(central_difference(lambda x: eval_f_mu(mu, x, ctx), 0.0, derivative_step(ctx)))
        margins.append(1e-4 - tangent)
        detail += f", |f'_mu*(0)| = {tangent:.2e}"
    return result('gradient_at_origin', margins, detail)


def check_scalar_roots(ctx: SpectralContext) -> CheckResult:
    margins = []
    for subdomain, roots in ((1, ctx.roots1), (2, ctx.roots2)):
        mu = ctx.scalar_map(subdomain)
        for root in (roots.minus, roots.plus):
            if root is not None and math.isfinite(root):
                margins.append(DOUBLE_ROOT_TOL * max(1.0, abs(root)) - abs(mu(root)))
    return result('scalar_roots', margins, f"roots1={ctx.big_lambda1}, roots2={ctx.big_lambda2}")


def check_root_box(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    """F < 0 beyond the roots of the scalar maps."""
    s = parameter_scale(ctx)
    margins = []
    for lam in ctx.big_lambda1:
        if lam is None or not math.isfinite(lam):
            continue
        beyond = lam + math.copysign(0.1, lam)
        margins.extend(-eval_F(beyond, y, ctx) for y in rng.uniform(-s, s, size=draws))
    for lam in ctx.big_lambda2:
        if lam is None or not math.isfinite(lam):
            continue
        beyond = lam + math.copysign(0.1, lam)
        margins.extend(-eval_F(x, beyond, ctx) for x in rng.uniform(-s, s, size=draws))
    return result('root_box', margins, f"{len(margins)} samples beyond the scalar roots")


def check_robin_below_dirichlet(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    """σ1 with a Robin end lies below σ1 with that end made Dirichlet."""
    s = parameter_scale(ctx)
    margins = []
    part = ctx.mesh.part1
    robin = ScalarMap(part, ctx.m1, Boundary.neumann(), Boundary.robin(ctx.gamma1), ctx.tol_eig)
    dirichlet = ScalarMap(part, ctx.m1, Boundary.neumann(), Boundary.dirichlet(), ctx.tol_eig)
    for lam in rng.uniform(-s, s, size=draws):
        margins.append(dirichlet(lam) - robin(lam))
    return result('robin_below_dirichlet', margins, f"{draws} draws on Omega_1")


def random_potential(ctx: SpectralContext, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-POTENTIAL_RANGE, POTENTIAL_RANGE, size=ctx.base.size)


def principal_value(ctx: SpectralContext, c: np.ndarray) -> float:
    return principal_eigenpair(ctx.base.with_potential(c), ctx.tol_eig).value


def check_monotonicity(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    """c <= d componentwise gives Λ1(c) <= Λ1(d), strictly when they differ."""
    margins = []
    for _ in range(draws):
        c = random_potential(ctx, rng)
        mask = rng.random(c.size) < 0.5
        mask[rng.integers(c.size)] = True
        d = c.copy()
        d[mask] += rng.uniform(0.1, 1.0, size=int(mask.sum()))
        value = principal_value(ctx, c)
        margins.append(principal_value(ctx, d) - value - STRICT_GAP)
    return result('monotonicity', margins, f"{draws} ordered potential pairs")


def check_lipschitz(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    """|Λ1(c + δ) - Λ1(c)| <= ‖δ‖∞."""
    margins = []
    for _ in range(draws):
        c = random_potential(ctx, rng)
        delta = rng.uniform(-1.0, 1.0, size=c.size) * rng.uniform(0.01, 2.0)
        change = abs(principal_value(ctx, c + delta) - principal_value(ctx, c))
        margins.append(float(np.max(np.abs(delta))) + MONOTONE_TOL - change)
    return result('lipschitz', margins, f"{draws} random perturbations")


def check_supersolution(ctx: SpectralContext, rng: np.random.Generator, draws: int) -> CheckResult:
    """Λ1 > 0 exactly when a positive forcing has a positive solution."""
    margins = []
    for _ in range(draws):
        c = random_potential(ctx, rng)
        shift = principal_value(ctx, c)
        forcing = rng.uniform(0.1, 1.0, size=c.size)
        # Potential moved so that Λ1 = target
        for target, sign in ((rng.uniform(0.1, 2.0), 1.0), (rng.uniform(-2.0, -0.1), -1.0)):
            u = ctx.base.with_potential(c - shift + target).solve(forcing)
            margins.append(sign * float(np.min(u)))
    return result('supersolution', margins, f"{draws} potentials with Lambda1 on both sides of 0")


def check_branch_limit(ctx: SpectralContext) -> CheckResult:
    """𝓗 falls toward -inf as λ1 approaches Λ1^+ from below; violations are warnings only."""
    plus = ctx.roots1.plus
    if ctx.sign1 != SignClass.NONNEG or ctx.sign2 != SignClass.NONNEG or plus is None or not math.isfinite(plus):
        return CheckResult(name='branch_limit', passed=True, worst=math.inf, samples=0, detail='not applicable')
    scale = max(abs(plus), 1.0)
    lam1 = [plus - f * scale for f in BRANCH_LIMIT_STEPS]
    values = [branch_value(ctx, x) for x in lam1]
    values = [-math.inf if v is None else v for v in values]
    margins, warnings = [], []
    for (x0, v0), (x1, v1) in zip(zip(lam1, values), zip(lam1[1:], values[1:])):
        margin = v0 - v1 if math.isfinite(v1) else math.inf
        margins.append(margin)
        if margin < 0:
            warnings.append(f"branch_limit: H rises from {v0:.6g} to {v1:.6g} "
                            f"between lambda1={x0:.6g} and {x1:.6g}")
    return CheckResult(name='branch_limit', passed=True, worst=min(margins), samples=len(values),
                       detail=f"H near Lambda1+={plus:.6g}: {[f'{v:.4g}' for v in values]}", warnings=warnings)


def coarse_config(config: RunConfig) -> RunConfig:
    spec = config.domain
    domain = spec.model_copy(update={'n1': max(MIN_NODES, spec.n1 // 4), 'n2': max(MIN_NODES, spec.n2 // 4)})
    return config.model_copy(update={'domain': domain})


def run_suite(config: RunConfig, coarse: bool = False) -> VerificationReport:
    if coarse:
        config = coarse_config(config)
    rng = np.random.default_rng(config.seed)
    mesh = mesh_for(config)
    ctx = context_for(config, mesh)
    draws = config.verify.draws
    logger.info(f"Verification suite: seed {config.seed}, {draws} draws, n=({mesh.spec.n1}, {mesh.spec.n2})")

    checks = [check_origin(ctx),
              check_shift_identity(mesh, ctx.gamma1, ctx.gamma2),
              check_oracle(mesh, rng, draws),
              *check_bounds(ctx, rng, draws),
              check_concavity(ctx, rng, config.verify.segments),
              check_derivative_signs(ctx, rng, draws),
              check_gradient(ctx),
              check_scalar_roots(ctx),
              check_root_box(ctx, rng, max(1, draws // 4)),
              check_robin_below_dirichlet(ctx, rng, max(1, draws // 4)),
              check_monotonicity(ctx, rng, max(4, draws // 4)),
              check_lipschitz(ctx, rng, max(4, draws // 4)),
              check_supersolution(ctx, rng, max(4, draws // 4)),
              check_branch_limit(ctx)]

    for check in checks:
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(level, f"{check.name}: {'pass' if check.passed else 'FAIL'} (worst margin {check.worst:.3e})")
        for warning in check.warnings:
            logger.warning(warning)
    return VerificationReport(seed=config.seed, coarse=coarse, checks=checks)
