from functools import cached_property
from typing import Callable
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import bracket, brentq, minimize_scalar

from backend.eigen import TOL_EIG, EigenResult, principal_eigenpair
from backend.errors import ConfigError, EmptyZeroSet, NoConvergence
from backend.fields import CoefficientField, SignClass, classify_sign, zero_set
from backend.geometry import Mesh, SubMesh
from backend.operator import (Boundary, InterfaceOperator, ScalarOperator, assemble_interface,
                              assemble_scalar, check_coupling)


logger = logging.getLogger('spectral_maps')

ROOT_TOL = 1e-8
DOUBLE_ROOT_TOL = 1e-6
DERIVATIVE_STEP = 1e-4
R_CAP = 1e3
BOX_FACTOR = 2.0
MAX_DOUBLINGS = 60
DEGENERATE_STEPS = (-1e2, -1e3, -1e4)


# Roots of a scalar map μ(λ); ±inf mark a missing root on an unbounded side
class ScalarRoots(BaseModel):
    minus: float | None = None
    plus: float | None = None
    maximizer: float | None = None      # λ0 for sign-changing weights
    peak: float | None = None           # μ(λ0)
    outcome: str = 'one'                # one, two, double or none

    def reflected(self) -> "ScalarRoots":
        flip = lambda v: None if v is None else -v
        return ScalarRoots(minus=flip(self.plus), plus=flip(self.minus), maximizer=flip(self.maximizer),
                           peak=self.peak, outcome=self.outcome)


class ScalarMap:
    """λ ↦ σ1(-Δ - λc; B) on one subdomain."""

    def __init__(self, part: SubMesh, weight: CoefficientField | np.ndarray, left: Boundary, right: Boundary,
                 tol_eig: float = TOL_EIG):
        self.base = assemble_scalar(part, None, left, right)
        values = weight.values if isinstance(weight, CoefficientField) else np.asarray(weight, dtype=float)
        self.weight = values[self.base.free_nodes]
        self.tol_eig = tol_eig

    def operator(self, lam: float) -> ScalarOperator:
        return self.base.with_potential(-lam * self.weight)

    def eigenpair(self, lam: float) -> EigenResult:
        return principal_eigenpair(self.operator(lam), self.tol_eig)

    def __call__(self, lam: float) -> float:
        return self.eigenpair(lam).value


def expand(func: Callable[[float], float], origin: float, direction: float, want_negative: bool = True,
           step: float = 1.0, limit: float = math.inf) -> tuple[float, float] | None:
    """Walk origin + direction·step·2^j until func takes the wanted sign.

    Returns (last point visited before the sign change, first point with the
    wanted sign), or None once the walk leaves [origin - limit, origin + limit].
    """
    previous = origin
    for _ in range(MAX_DOUBLINGS):
        if step > limit:
            return None
        x = origin + direction * step
        value = func(x)
        if (value < 0) if want_negative else (value > 0):
            return previous, x
        previous = x
        step *= 2.0
    return None


def find_root(func: Callable[[float], float], a: float, b: float) -> float:
    a, b = min(a, b), max(a, b)
    xtol = ROOT_TOL * 1e-2 * (1.0 + min(abs(a), abs(b)))
    return brentq(func, a, b, xtol=xtol, rtol=1e-12, maxiter=200)


def monotone_root(func: Callable[[float], float], decreasing: bool = True, limit: float = math.inf,
                  step: float = 1.0) -> float | None:
    """Unique zero of a monotone function, searched outward from 0."""
    f0 = func(0.0)
    if f0 == 0.0:
        return 0.0
    down = 1.0 if decreasing else -1.0
    found = expand(func, 0.0, down if f0 > 0 else -down, want_negative=f0 > 0, step=step, limit=limit)
    return None if found is None else find_root(func, *found)


def concave_max(func: Callable[[float], float], start: tuple[float, float] = (-1.0, 1.0)) -> tuple[float, float]:
    """Maximizer and maximum of a concave function by golden-section search."""
    neg = lambda x: -func(x)
    xa, xb, xc = bracket(neg, xa=start[0], xb=start[1])[:3]
    best = minimize_scalar(neg, bracket=(xa, xb, xc), method='golden', tol=1e-10)
    return float(best.x), -float(best.fun)


def concave_roots(func: Callable[[float], float], limit: float = math.inf) -> ScalarRoots:
    """Zeros of a concave function tending to -inf on both sides: none, one double or two."""
    x0, peak = concave_max(func)

    if peak < -DOUBLE_ROOT_TOL:
        return ScalarRoots(maximizer=x0, peak=peak, outcome='none')
    if peak <= DOUBLE_ROOT_TOL:
        return ScalarRoots(minus=x0, plus=x0, maximizer=x0, peak=peak, outcome='double')

    left = expand(func, x0, -1.0, limit=limit)
    right = expand(func, x0, +1.0, limit=limit)
    return ScalarRoots(minus=None if left is None else find_root(func, *left),
                       plus=None if right is None else find_root(func, *right),
                       maximizer=x0, peak=peak, outcome='two')


def scalar_mu(lam: float, c: CoefficientField, left: Boundary, right: Boundary, tol_eig: float = TOL_EIG) -> float:
    return ScalarMap(c.part, c, left, right, tol_eig)(lam)


def map_roots(mu: ScalarMap, sign: SignClass) -> ScalarRoots:
    if sign == SignClass.NONPOS:
        return map_roots(reflected_map(mu), SignClass.NONNEG).reflected()

    if sign == SignClass.NONNEG:
        mu0 = mu(0.0)
        if mu0 <= ROOT_TOL:
            return ScalarRoots(minus=-math.inf, plus=0.0)
        root = monotone_root(mu, decreasing=True, step=max(1.0, mu0))
        if root is None:
            raise NoConvergence("No positive root of the scalar eigenvalue map")
        return ScalarRoots(minus=-math.inf, plus=root)

    # Sign-changing weight: μ is concave and tends to -inf on both sides
    roots = concave_roots(mu)
    if roots.outcome == 'two' and (roots.minus is None or roots.plus is None):
        raise NoConvergence("Could not bracket both roots of the scalar eigenvalue map")
    return roots


def reflected_map(mu: ScalarMap) -> ScalarMap:
    # λ ↦ -λ with weight -c gives the same operators
    flipped = ScalarMap.__new__(ScalarMap)
    flipped.base, flipped.weight, flipped.tol_eig = mu.base, -mu.weight, mu.tol_eig
    return flipped


def scalar_roots(c: CoefficientField, left: Boundary, right: Boundary, tol_eig: float = TOL_EIG) -> ScalarRoots:
    sign = classify_sign(c, require_nontrivial=True)
    roots = map_roots(ScalarMap(c.part, c, left, right, tol_eig), sign)
    logger.debug(f"Roots of mu on subdomain {c.subdomain} ({sign.value}): {roots.minus}, {roots.plus}")
    return roots


def scalar_dirichlet_limit(c: CoefficientField, left: Boundary, right: Boundary, tol_eig: float = TOL_EIG) -> float:
    """lim μ(λ) as λ → -∞ for c ⪈ 0: Dirichlet eigenvalue of the zero set of c.

    Each zero interval is widened to the neighbouring nodes where c > 0, which
    become Dirichlet nodes; a zero interval touching an end keeps that end's
    boundary condition.
    """
    zeros = zero_set(c)
    if zeros.empty:
        raise EmptyZeroSet(f"Weight on subdomain {c.subdomain} has an empty zero set")
    if not zeros.interior_flag:
        logger.warning(f"Zero set of the weight on subdomain {c.subdomain} touches the boundary; "
                       f"the degenerate limit is not guaranteed")

    nodes = c.part.nodes
    last = len(nodes) - 1
    values = []
    for i, j in zeros.index_ranges:
        a, b = max(i - 1, 0), min(j + 1, last)
        piece = SubMesh(nodes=nodes[a:b + 1], radial_power=c.part.radial_power)
        piece_left = Boundary.dirichlet() if i > 0 else left
        piece_right = Boundary.dirichlet() if j < last else right
        op = assemble_scalar(piece, None, piece_left, piece_right)
        values.append(principal_eigenpair(op, tol_eig).value)
    return min(values)


class SpectralContext(BaseModel):
    """Weights, coupling and the landmark values derived from them."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mesh: Mesh
    m1: CoefficientField
    m2: CoefficientField
    gamma1: float
    gamma2: float
    tol_eig: float = TOL_EIG
    r_cap: float = R_CAP

    @cached_property
    def base(self) -> InterfaceOperator:
        return assemble_interface(self.mesh, None, None, self.gamma1, self.gamma2)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.concatenate((self.m1.values, self.m2.values))

    @property
    def sign1(self) -> SignClass:
        return self.m1.sign_class

    @property
    def sign2(self) -> SignClass:
        return self.m2.sign_class

    # Integrals against the dual-cell volumes the operator is weighted with
    @cached_property
    def int1(self) -> float:
        return float(self.mesh.part1.cell_volumes @ self.m1.values)

    @cached_property
    def int2(self) -> float:
        return float(self.mesh.part2.cell_volumes @ self.m2.values)

    @property
    def boundary1(self) -> tuple[Boundary, Boundary]:
        return Boundary.neumann(), Boundary.robin(self.gamma1)

    @property
    def boundary2(self) -> tuple[Boundary, Boundary]:
        return Boundary.robin(self.gamma2), Boundary.neumann()

    @cached_property
    def roots1(self) -> ScalarRoots:
        return scalar_roots(self.m1, *self.boundary1, tol_eig=self.tol_eig)

    @cached_property
    def roots2(self) -> ScalarRoots:
        return scalar_roots(self.m2, *self.boundary2, tol_eig=self.tol_eig)

    @property
    def big_lambda1(self) -> tuple[float | None, float | None]:
        return self.roots1.minus, self.roots1.plus

    @property
    def big_lambda2(self) -> tuple[float | None, float | None]:
        return self.roots2.minus, self.roots2.plus

    def operator(self, lam1: float, lam2: float) -> InterfaceOperator:
        return self.base.with_potential(-np.concatenate((lam1 * self.m1.values, lam2 * self.m2.values)))

    def eigenpair(self, lam1: float, lam2: float) -> EigenResult:
        return principal_eigenpair(self.operator(lam1, lam2), self.tol_eig)

    def scalar_map(self, subdomain: int) -> ScalarMap:
        if subdomain == 1:
            return ScalarMap(self.mesh.part1, self.m1, *self.boundary1, tol_eig=self.tol_eig)
        return ScalarMap(self.mesh.part2, self.m2, *self.boundary2, tol_eig=self.tol_eig)


def build_context(mesh: Mesh, m1: CoefficientField, m2: CoefficientField, gamma1: float, gamma2: float,
                  tol_eig: float = TOL_EIG, r_cap: float = R_CAP) -> SpectralContext:
    check_coupling(gamma1, gamma2)
    for field in (m1, m2):
        classify_sign(field, require_nontrivial=True)
    ctx = SpectralContext(mesh=mesh, m1=m1, m2=m2, gamma1=gamma1, gamma2=gamma2, tol_eig=tol_eig, r_cap=r_cap)
    logger.info(f"Context: m1 {ctx.sign1.value} (int {ctx.int1:.6g}), m2 {ctx.sign2.value} (int {ctx.int2:.6g}), "
                f"gamma=({gamma1}, {gamma2})")
    return ctx


def eval_F(lam1: float, lam2: float, ctx: SpectralContext) -> float:
    """F(λ1, λ2) = Λ1(-λ1 m1, -λ2 m2)."""
    return ctx.eigenpair(lam1, lam2).value


def eval_f_mu(mu: float, lam1: float, ctx: SpectralContext) -> float:
    return eval_F(lam1, mu * lam1, ctx)


def eval_g(lam2: float, ctx: SpectralContext) -> float:
    return eval_F(0.0, lam2, ctx)


def mu_star(ctx: SpectralContext) -> float | None:
    if abs(ctx.int2) <= 1e-12 * max(1.0, ctx.m2.sup_norm * ctx.mesh.measure2):
        return None
    return -(ctx.gamma2 * ctx.int1) / (ctx.gamma1 * ctx.int2)


def central_difference(func: Callable[[float], float], x: float = 0.0, step: float = DERIVATIVE_STEP) -> float:
    return (func(x + step) - func(x - step)) / (2.0 * step)


def cota1(lam1: float, lam2: float, ctx: SpectralContext) -> float:
    """min of the two scalar eigenvalues bounding F(λ1, λ2) from above (strictly)."""
    return min(ctx.scalar_map(1)(lam1), ctx.scalar_map(2)(lam2))


def cota2(lam1: float, lam2: float, ctx: SpectralContext) -> float:
    """Upper bound of F from the constant test function."""
    mesh = ctx.mesh
    return ((-lam1 * ctx.int1 - lam2 * ctx.int2 + (ctx.gamma1 + ctx.gamma2) * mesh.interface_measure)
            / (mesh.measure1 + mesh.measure2))


def lambda_box(ctx: SpectralContext, t: float) -> float:
    """Largest ray parameter worth searching along direction t.

    Every point of the curve lies inside the box (Λ1-, Λ1+) x (Λ2-, Λ2+); the
    exit distance is enlarged by BOX_FACTOR and capped at r_cap.
    """
    direction = (math.cos(t), math.sin(t))
    bounds = (ctx.big_lambda1, ctx.big_lambda2)
    exits = []
    for d, (low, high) in zip(direction, bounds):
        if abs(d) < 1e-14:
            continue
        edge = high if d > 0 else low
        if edge is not None and math.isfinite(edge):
            exits.append(edge / d)
    exits = [r for r in exits if r > 0]
    if not exits:
        return ctx.r_cap
    return min(BOX_FACTOR * min(exits), ctx.r_cap)


def degenerate_limit(ctx: SpectralContext, a_star: float) -> float:
    """lim F(a_n, b_n) for a_n → a*, b_n → -∞ with m2 ⪈ 0."""
    if ctx.sign2 != SignClass.NONNEG:
        raise ConfigError(f"Degenerate limit needs a nonnegative m2, got {ctx.sign2.value}")
    sigma1 = ctx.scalar_map(1)(a_star)
    sigma0 = scalar_dirichlet_limit(ctx.m2, *ctx.boundary2, tol_eig=ctx.tol_eig)
    logger.info(f"Degenerate limit: sigma_Omega1={sigma1:.10g}, sigma_M2^0={sigma0:.10g}")
    return min(sigma1, sigma0)


class DegenerateSequence(BaseModel):
    limit: float
    b: list[float]
    values: list[float]
    distances: list[float]
    monotone: bool


def degenerate_sequence(ctx: SpectralContext, a_star: float,
                        bs: tuple[float, ...] = DEGENERATE_STEPS) -> DegenerateSequence:
    """F(a*, b) along b → -∞ against the degenerate limit; non-monotone approach is flagged, not fatal."""
    limit = degenerate_limit(ctx, a_star)
    values = [eval_F(a_star, b, ctx) for b in bs]
    distances = [abs(v - limit) for v in values]
    monotone = all(d0 > d1 for d0, d1 in zip(distances, distances[1:]))
    if not monotone:
        logger.warning(f"F(a*, b) does not approach the degenerate limit {limit:.10g} monotonically: "
                       f"distances {[f'{d:.3e}' for d in distances]} at b = {list(bs)}")
    return DegenerateSequence(limit=limit, b=list(bs), values=values, distances=distances, monotone=monotone)

