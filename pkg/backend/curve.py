"""Tracing and classification of the principal eigencurve {F = 0}.

Rays leave the origin with angles t; along each, φ_t(r) = F(r cos t, r sin t)
is concave with φ_t(0) = 0, so a positive root exists only where φ_t grows at
r = 0, that is on the open half-plane ∇F(0,0)·d > 0. The trace starts at the
origin, visits that half-plane counterclockwise from the tangent direction and
comes back to the origin.
"""
from enum import Enum
from functools import partial
from multiprocessing import Pool
import logging
import math

import numpy as np
from matplotlib.path import Path
from pydantic import BaseModel
from scipy.optimize import brentq

from backend.errors import BranchSplitFailed, InconsistentCase
from backend.fields import SignClass
from backend.spectral_maps import (DERIVATIVE_STEP, ROOT_TOL, ScalarRoots, SpectralContext,
                                   central_difference, concave_max, concave_roots, eval_F, lambda_box, monotone_root,
                                   mu_star)


logger = logging.getLogger('curve')

TOL_CURVE = 1e-6
N_RAYS = 512
MIN_RAYS = 64
ARC_FRACTION = 0.01
REFINE_ROUNDS = 6
MONOTONE_SLACK = 1e-9
AXIS_ANGLES = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)


class CaseTag(str, Enum):
    BOTH_NONNEG = 'both_nonneg'
    MIXED = 'm1_nonneg_m2_sign'
    MIRRORED = 'm2_nonneg_m1_sign'
    BOTH_SIGN = 'both_sign'


class Classification(BaseModel):
    case_tag: CaseTag
    sub_tag: str | None = None              # sign of the integral of the sign-changing weight
    closed: bool                            # predicted topology
    int1: float
    int2: float
    mu_star: float | None = None
    predictions: dict[str, str] = {}        # landmark -> '>0', '<0', '=0', '>=0', '<=0'
    monotone: str | None = None             # predicted behaviour of the single branch


class RaySample(BaseModel):
    t: float
    status: str = 'skipped'                 # hit, tangent, unbounded or skipped
    r: float | None = None
    lam1: float | None = None
    lam2: float | None = None
    residual: float | None = None

    @property
    def hit(self) -> bool:
        return self.status in ('hit', 'tangent')


class CurvePoint(BaseModel):
    lam1: float
    lam2: float
    t: float
    r: float
    residual: float
    segment: int = 0
    origin: bool = False                    # the tangency point (0, 0)


class Landmarks(BaseModel):
    Lambda1_minus: float | None = None
    Lambda1_plus: float | None = None
    Lambda2_minus: float | None = None
    Lambda2_plus: float | None = None
    mu_star: float | None = None
    lambda1_max: float | None = None
    lambda2_bar: float | None = None        # λ2 at λ1_max
    lambda1_min: float | None = None
    lambda2_under: float | None = None      # λ2 at λ1_min
    lambda2_max: float | None = None
    lambda1_at_lambda2_max: float | None = None
    lambda2_min: float | None = None
    lambda1_at_lambda2_min: float | None = None
    lambda2_star: float | None = None
    tangent_angle: float | None = None
    first_branch_angle: float | None = None
    last_branch_angle: float | None = None


class EigencurveTrace(BaseModel):
    case_tag: CaseTag
    sub_tag: str | None = None
    points: list[CurvePoint]
    landmarks: Landmarks
    closed: bool
    n_rays: int
    unbounded_angles: list[float] = []

    @property
    def lam1(self) -> np.ndarray:
        return np.array([p.lam1 for p in self.points])

    @property
    def lam2(self) -> np.ndarray:
        return np.array([p.lam2 for p in self.points])

    def segments(self) -> list[np.ndarray]:
        """Polyline pieces as (k, 2) arrays, split where rays found no root."""
        pieces: dict[int, list[tuple[float, float]]] = {}
        for p in self.points:
            pieces.setdefault(p.segment, []).append((p.lam1, p.lam2))
        return [np.array(v) for _, v in sorted(pieces.items())]


class Branch(BaseModel):
    lam1: list[float]
    lam2: list[float]
    monotone: str | None = None
    monotone_ok: bool = True
    over: str = 'lambda1'           # graph variable: 'lambda2' for the mirrored branches


class HMaps(BaseModel):
    case_tag: CaseTag
    branches: dict[str, Branch]


# Gradient of F at the origin and the tangent direction of the curve there
def gradient_at_origin(ctx: SpectralContext) -> np.ndarray:
    g1, g2 = ctx.gamma2 * ctx.int1, ctx.gamma1 * ctx.int2
    scale = ctx.gamma2 * ctx.mesh.measure1 + ctx.gamma1 * ctx.mesh.measure2
    return -np.array([g1, g2]) / scale


def numerical_gradient(ctx: SpectralContext, step: float = DERIVATIVE_STEP) -> np.ndarray:
    return np.array([central_difference(lambda s: eval_F(s, 0.0, ctx), 0.0, step),
                     central_difference(lambda s: eval_F(0.0, s, ctx), 0.0, step)])


def sign_word(value: float, tol: float) -> str:
    if value > tol:
        return 'pos'
    if value < -tol:
        return 'neg'
    return 'zero'


def integral_tol(ctx: SpectralContext, subdomain: int) -> float:
    field, measure = (ctx.m1, ctx.mesh.measure1) if subdomain == 1 else (ctx.m2, ctx.mesh.measure2)
    return 1e-10 * max(1.0, field.sup_norm * measure)


def classify(ctx: SpectralContext) -> Classification:
    definite = (SignClass.NONNEG, SignClass.NONPOS)
    s1, s2 = ctx.sign1, ctx.sign2
    w1 = sign_word(ctx.int1, integral_tol(ctx, 1))
    w2 = sign_word(ctx.int2, integral_tol(ctx, 2))

    predictions: dict[str, str] = {}
    monotone = None
    if s1 in definite and s2 in definite:
        tag, sub, closed = CaseTag.BOTH_NONNEG, None, False
        monotone = 'decreasing'
    elif s1 in definite:
        tag, sub, closed = CaseTag.MIXED, w2, False
        predictions = {'neg': {'lambda1_max': '>0', 'lambda2_bar': '>0'},
                       'pos': {'lambda1_max': '>0', 'lambda2_bar': '<0'},
                       'zero': {'lambda1_max': '=0', 'lambda2_bar': '=0'}}[w2]
    elif s2 in definite:
        tag, sub, closed = CaseTag.MIRRORED, w1, False
        predictions = {'neg': {'lambda2_max': '>0', 'lambda1_at_lambda2_max': '>0'},
                       'pos': {'lambda2_max': '>0', 'lambda1_at_lambda2_max': '<0'},
                       'zero': {'lambda2_max': '=0', 'lambda1_at_lambda2_max': '=0'}}[w1]
    else:
        tag, sub, closed = CaseTag.BOTH_SIGN, w2, True
        strict2 = w2 != 'zero'
        strict1 = w1 != 'zero'
        predictions = {'lambda1_min': '<0' if strict2 else '<=0', 'lambda1_max': '>0' if strict2 else '>=0',
                       'lambda2_min': '<0' if strict1 else '<=0', 'lambda2_max': '>0' if strict1 else '>=0'}

    if SignClass.NONPOS in (s1, s2):
        # The statements hold for nonnegative weights; reflected weights keep only the topology
        logger.warning("A weight is nonpositive: landmark sign predictions are dropped, reflect lambda_i to use them")
        predictions, monotone = {}, None

    return Classification(case_tag=tag, sub_tag=sub, closed=closed, int1=ctx.int1, int2=ctx.int2,
                          mu_star=mu_star(ctx), predictions=predictions, monotone=monotone)


def check_prediction(value: float | None, rule: str, tol: float) -> bool:
    if value is None:
        return False
    return {'>0': value > tol, '<0': value < -tol, '=0': abs(value) <= tol,
            '>=0': value >= -tol, '<=0': value <= tol}[rule]


def root_on_ray(t: float, ctx: SpectralContext, tol_curve: float = TOL_CURVE) -> RaySample:
    d1, d2 = math.cos(t), math.sin(t)
    slope = float(gradient_at_origin(ctx) @ (d1, d2))
    if slope <= 0:
        return RaySample(t=t, status='skipped')

    phi = lambda r: eval_F(r * d1, r * d2, ctx)
    r_max = lambda_box(ctx, t)
    r = r_max / 64.0
    value = phi(r)

    if value > 0:
        # Geometric expansion up to the box
        previous = r
        while value > 0 and r < r_max:
            previous, r = r, min(2.0 * r, r_max)
            value = phi(r)
        if value > 0:
            return RaySample(t=t, status='unbounded')
        low, high = previous, r
    else:
        high = r
        for _ in range(60):
            r /= 2.0
            if phi(r) > 0:
                break
            high = r
        else:
            # Root indistinguishable from r = 0: the ray is tangent to the curve
            return RaySample(t=t, status='tangent', r=0.0, lam1=0.0, lam2=0.0, residual=0.0)
        low = r

    root = brentq(phi, low, high, xtol=1e-13 * (1.0 + high), rtol=1e-13, maxiter=200)
    residual = abs(phi(root))
    if residual > tol_curve:
        logger.warning(f"Ray t={t:.6f}: |F| = {residual:.2e} exceeds tol_curve at r={root:.6g}")
    return RaySample(t=t, status='hit', r=root, lam1=root * d1, lam2=root * d2, residual=residual)


def cast_rays(angles: list[float], ctx: SpectralContext, tol_curve: float, workers: int = 1) -> list[RaySample]:
    task = partial(root_on_ray, ctx=ctx, tol_curve=tol_curve)
    if workers > 1 and len(angles) > 1:
        with Pool(workers) as pool:
            return pool.map(task, angles)
    return [task(t) for t in angles]


def refine_angles(ordered: list[RaySample], arc_tol: float, t_a: float) -> list[float]:
    """Bisect the angle between consecutive hits lying further apart than arc_tol."""
    new = []
    for a, b in zip(ordered, ordered[1:]):
        if not (a.hit and b.hit):
            continue
        if math.hypot(a.lam1 - b.lam1, a.lam2 - b.lam2) > arc_tol:
            gap = (b.t - a.t) % (2.0 * math.pi)
            new.append((a.t + 0.5 * gap) % (2.0 * math.pi))
    return new


def sweep_angles(n_rays: int) -> list[float]:
    """Uniform angles plus the four axis directions, where the axis roots lie."""
    grid = [2.0 * math.pi * i / n_rays for i in range(n_rays)]
    extra = [a for a in AXIS_ANGLES if min(abs(a - t) for t in grid) > 1e-12]
    return sorted(grid + extra)


def trace_curve(ctx: SpectralContext, n_rays: int = N_RAYS, tol_curve: float = TOL_CURVE, workers: int = 1,
                refine_rounds: int = REFINE_ROUNDS, refine_extremes: bool = True) -> EigencurveTrace:
    n_rays = max(int(n_rays), MIN_RAYS)
    cls = classify(ctx)
    gradient = gradient_at_origin(ctx)
    origin = CurvePoint(lam1=0.0, lam2=0.0, t=0.0, r=0.0, residual=abs(eval_F(0.0, 0.0, ctx)), origin=True)

    if np.linalg.norm(gradient) < 1e-14:
        logger.warning("Gradient of F vanishes at the origin: F <= 0 and the curve reduces to the origin")
        return EigencurveTrace(case_tag=cls.case_tag, sub_tag=cls.sub_tag, points=[origin], closed=cls.closed,
                               n_rays=n_rays, landmarks=collect_landmarks(ctx, cls, [], None, refine_extremes))

    t_a = (math.atan2(gradient[1], gradient[0]) - 0.5 * math.pi) % (2.0 * math.pi)
    order = lambda sample: (sample.t - t_a) % (2.0 * math.pi)
    logger.info(f"Tracing {cls.case_tag.value} curve with {n_rays} rays (tangent angle {t_a:.6f})")

    angles = sweep_angles(n_rays)
    samples = [p for p in cast_rays(angles, ctx, tol_curve, workers) if p.status != 'skipped']
    samples.sort(key=order)

    extra_budget = 4 * n_rays
    for _ in range(refine_rounds):
        hits = [p for p in samples if p.hit]
        if not hits or extra_budget <= 0:
            break
        extent = max(max(abs(p.lam1), abs(p.lam2)) for p in hits)
        new = refine_angles(samples, ARC_FRACTION * max(extent, 1e-12), t_a)[:extra_budget]
        if not new:
            break
        extra_budget -= len(new)
        samples.extend(p for p in cast_rays(new, ctx, tol_curve, workers) if p.status != 'skipped')
        samples.sort(key=order)

    points = [origin.model_copy(update={'t': t_a})]
    segment, gap = 0, False
    unbounded = []
    for sample in samples:
        if sample.status == 'unbounded':
            unbounded.append(sample.t)
            gap = True
        elif sample.status == 'hit':
            if gap:
                segment, gap = segment + 1, False
            points.append(CurvePoint(lam1=sample.lam1, lam2=sample.lam2, t=sample.t, r=sample.r,
                                     residual=sample.residual, segment=segment))
    if gap:
        segment += 1
    points.append(origin.model_copy(update={'t': (t_a + math.pi) % (2.0 * math.pi), 'segment': segment}))

    closed = bool(samples) and not unbounded
    if closed != cls.closed:
        raise InconsistentCase(f"Traced curve is {'closed' if closed else 'open'} ({len(unbounded)} unbounded rays) "
                               f"but case {cls.case_tag.value} predicts {'closed' if cls.closed else 'open'}; "
                               f"refine the mesh or enlarge r_cap")

    hit_points = [p for p in points if not p.origin]
    landmarks = collect_landmarks(ctx, cls, hit_points, t_a, refine_extremes)
    trace = EigencurveTrace(case_tag=cls.case_tag, sub_tag=cls.sub_tag, points=points, landmarks=landmarks,
                            closed=closed, n_rays=n_rays, unbounded_angles=unbounded)
    logger.info(f"Trace done: {len(hit_points)} points, closed={closed}, {len(unbounded)} unbounded rays")
    return trace


# Sections of F along vertical (λ1 fixed) and horizontal (λ2 fixed) lines
def section(ctx: SpectralContext, axis: str, value: float):
    if axis == 'vertical':
        return lambda y: eval_F(value, y, ctx)
    return lambda x: eval_F(x, value, ctx)


def section_roots(ctx: SpectralContext, axis: str, value: float) -> tuple[float, ...]:
    """Zeros of F on a vertical or horizontal line: at most two by concavity."""
    sign = ctx.sign2 if axis == 'vertical' else ctx.sign1
    func = section(ctx, axis, value)
    limit = ctx.r_cap
    if sign == SignClass.CHANGES:
        roots = concave_roots(func, limit)
        if roots.outcome == 'double':
            return (roots.maximizer,)
        return tuple(sorted(r for r in (roots.minus, roots.plus) if r is not None))
    root = monotone_root(func, decreasing=(sign == SignClass.NONNEG), limit=limit)
    return () if root is None else (root,)


def section_max(ctx: SpectralContext, axis: str, value: float) -> tuple[float, float] | None:
    sign = ctx.sign2 if axis == 'vertical' else ctx.sign1
    if sign != SignClass.CHANGES:
        return None
    return concave_max(section(ctx, axis, value))


def vertical_roots(lam1: float, ctx: SpectralContext) -> tuple[float, ...]:
    return section_roots(ctx, 'vertical', lam1)


def horizontal_roots(lam2: float, ctx: SpectralContext) -> tuple[float, ...]:
    return section_roots(ctx, 'horizontal', lam2)


def vertical_max(lam1: float, ctx: SpectralContext) -> tuple[float, float] | None:
    """(λ2 maximizing F(λ1, ·), max value), for sign-changing m2."""
    return section_max(ctx, 'vertical', lam1)


def extremes(ctx: SpectralContext, axis: str) -> tuple[float | None, float | None, float | None, float | None]:
    """(low, other at low, high, other at high) of the curve across the given sections.

    For vertical sections these are λ1_min, λ2 there, λ1_max, λ2 there: the
    zeros of the concave profile M(s) = max over the section at s.
    """
    bounds = ctx.big_lambda1 if axis == 'vertical' else ctx.big_lambda2
    slope = gradient_at_origin(ctx)[0 if axis == 'vertical' else 1]
    profile = lambda s: section_max(ctx, axis, s)[1]
    m0 = profile(0.0)

    def edge(bound):
        if bound is None or not math.isfinite(bound):
            return None, None
        inner = 0.0
        if m0 <= 0:
            # M(0) = 0 up to rounding: the curve leaves the origin towards bound only if F grows that way
            if slope * bound <= 0:
                return 0.0, section_max(ctx, axis, 0.0)[0]
            inner = bound
            for _ in range(40):
                inner *= 0.5
                if profile(inner) > 0:
                    break
            else:
                return 0.0, section_max(ctx, axis, 0.0)[0]
        far = bound
        for _ in range(100):
            if profile(far) < 0:
                break
            far *= 1.1
        s = brentq(profile, min(inner, far), max(inner, far), xtol=ROOT_TOL * 1e-2, rtol=1e-12)
        return s, section_max(ctx, axis, s)[0]

    low, low_other = edge(bounds[0])
    high, high_other = edge(bounds[1])
    return low, low_other, high, high_other


def lambda1_extremes(ctx: SpectralContext) -> tuple[float | None, float | None, float | None, float | None]:
    """(λ1_min, λ2 under, λ1_max, λ2 bar)."""
    return extremes(ctx, 'vertical')


def lambda2_extremes(ctx: SpectralContext) -> tuple[float | None, float | None, float | None, float | None]:
    """(λ2_min, λ1 there, λ2_max, λ1 there)."""
    return extremes(ctx, 'horizontal')


def lambda2_star(ctx: SpectralContext) -> float | None:
    """Nonzero zero of g(λ2) = F(0, λ2), the limit of h2(μ) as μ → ±∞."""
    nonzero = [r for r in vertical_roots(0.0, ctx) if abs(r) > 1e-6]
    return nonzero[0] if nonzero else None


def collect_landmarks(ctx: SpectralContext, cls: Classification, hits: list[CurvePoint], t_a: float | None,
                      refine: bool) -> Landmarks:
    roots1: ScalarRoots = ctx.roots1
    roots2: ScalarRoots = ctx.roots2
    marks = Landmarks(Lambda1_minus=roots1.minus, Lambda1_plus=roots1.plus, Lambda2_minus=roots2.minus,
                      Lambda2_plus=roots2.plus, mu_star=cls.mu_star, tangent_angle=t_a,
                      lambda2_star=lambda2_star(ctx))
    if hits:
        marks.first_branch_angle = hits[0].t
        marks.last_branch_angle = hits[-1].t

    if ctx.sign2 == SignClass.CHANGES:
        if refine:
            lo, lo2, hi, hi2 = lambda1_extremes(ctx)
        else:
            lo, lo2, hi, hi2 = polyline_extreme(hits, 0, min), None, polyline_extreme(hits, 0, max), None
        marks.lambda1_min, marks.lambda2_under, marks.lambda1_max, marks.lambda2_bar = lo, lo2, hi, hi2
        if cls.case_tag == CaseTag.MIXED:
            marks.lambda1_min = marks.lambda2_under = None
    if ctx.sign1 == SignClass.CHANGES:
        if refine:
            lo, lo1, hi, hi1 = lambda2_extremes(ctx)
        else:
            lo, lo1, hi, hi1 = polyline_extreme(hits, 1, min), None, polyline_extreme(hits, 1, max), None
        marks.lambda2_min, marks.lambda1_at_lambda2_min, marks.lambda2_max, marks.lambda1_at_lambda2_max = \
            lo, lo1, hi, hi1
        if cls.case_tag == CaseTag.MIRRORED:
            marks.lambda2_min = marks.lambda1_at_lambda2_min = None
    return marks


def polyline_extreme(hits: list[CurvePoint], coordinate: int, pick) -> float | None:
    if not hits:
        return None
    return pick((p.lam1, p.lam2)[coordinate] for p in hits)


def h1_of_mu(mu: float, ctx: SpectralContext, tol_curve: float = TOL_CURVE) -> float | None:
    """Nonzero zero of f_μ(λ1) = F(λ1, μλ1), or None when λ1 = 0 is the only one."""
    gradient = gradient_at_origin(ctx)
    slope = float(gradient @ (1.0, mu))
    if abs(slope) <= 1e-12 * float(np.linalg.norm(gradient)) * (1.0 + abs(mu)):
        return 0.0
    t = math.atan2(mu, 1.0) if slope > 0 else math.atan2(-mu, -1.0)
    sample = root_on_ray(t, ctx, tol_curve)
    return sample.lam1 if sample.hit else None


def h2_of_mu(mu: float, ctx: SpectralContext, tol_curve: float = TOL_CURVE) -> float | None:
    h1 = h1_of_mu(mu, ctx, tol_curve)
    return None if h1 is None else mu * h1


def branch_value(ctx: SpectralContext, value: float, branch: str = 'H', over: str = 'lambda1') -> float | None:
    """𝓗, 𝓗+ or 𝓗- evaluated exactly on the vertical line λ1 = value (horizontal line when over='lambda2')."""
    roots = vertical_roots(value, ctx) if over == 'lambda1' else horizontal_roots(value, ctx)
    if not roots:
        return None
    if branch == 'H+':
        return max(roots)
    if branch == 'H-':
        return min(roots)
    return roots[0]


def check_monotone(values: np.ndarray, direction: str) -> bool:
    steps = np.diff(values)
    if direction == 'decreasing':
        return bool(np.all(steps < MONOTONE_SLACK))
    return bool(np.all(steps > -MONOTONE_SLACK))


def make_branch(points: list[tuple[float, float]], monotone: str | None, name: str, over: str = 'lambda1') -> Branch:
    key = (lambda p: p) if over == 'lambda1' else (lambda p: (p[1], p[0]))
    pts = sorted(set(points), key=key)
    lam1 = np.array([p[0] for p in pts])
    lam2 = np.array([p[1] for p in pts])
    ok = True if monotone is None else check_monotone(lam2 if over == 'lambda1' else lam1, monotone)
    if not ok:
        logger.warning(f"Branch {name} is not {monotone} over {over} on its sampled domain")
    return Branch(lam1=lam1.tolist(), lam2=lam2.tolist(), monotone=monotone, monotone_ok=ok, over=over)


def H_maps(trace: EigencurveTrace, split_tol: float = 1e-9) -> HMaps:
    """Split the traced points into the graphs 𝓗 or 𝓗- < 𝓗+ (over λ2 for a mirrored curve)."""
    points = [(p.lam1, p.lam2) for p in trace.points if not p.origin] + [(0.0, 0.0)]
    marks = trace.landmarks
    tag = trace.case_tag

    if tag == CaseTag.BOTH_NONNEG:
        return HMaps(case_tag=tag, branches={'H': make_branch(points, 'decreasing', 'H')})

    lam1 = np.array([p[0] for p in points])
    lam2 = np.array([p[1] for p in points])
    if tag == CaseTag.MIRRORED:
        # Topmost point splits the curve into graphs over λ2
        top = int(np.argmax(lam2))
        near = lam2 >= lam2[top] - split_tol * max(1.0, abs(lam2[top]))
        if np.ptp(lam1[near]) > 1e-3 * max(1.0, np.ptp(lam1)):
            raise BranchSplitFailed(f"Topmost point of the curve is not unique: {int(near.sum())} points within "
                                    f"tolerance spread over {np.ptp(lam1[near]):.3g} in lambda1")
        level = marks.lambda1_at_lambda2_max if marks.lambda1_at_lambda2_max is not None else lam1[top]
        right = [p for p in points if p[0] >= level]
        left = [p for p in points if p[0] <= level]
        return HMaps(case_tag=tag, branches={'H+': make_branch(right, 'decreasing', 'H+', over='lambda2'),
                                             'H-': make_branch(left, 'increasing', 'H-', over='lambda2')})

    right = int(np.argmax(lam1))
    near = lam1 >= lam1[right] - split_tol * max(1.0, abs(lam1[right]))
    if np.ptp(lam2[near]) > 1e-3 * max(1.0, np.ptp(lam2)):
        raise BranchSplitFailed(f"Rightmost point of the curve is not unique: {int(near.sum())} points within "
                                f"tolerance spread over {np.ptp(lam2[near]):.3g} in lambda2")

    if tag == CaseTag.MIXED:
        level = marks.lambda2_bar if marks.lambda2_bar is not None else lam2[right]
        upper = [p for p in points if p[1] >= level]
        lower = [p for p in points if p[1] <= level]
        return HMaps(case_tag=tag, branches={'H+': make_branch(upper, 'decreasing', 'H+'),
                                             'H-': make_branch(lower, 'increasing', 'H-')})

    # Closed curve: chord between the leftmost and rightmost points
    left = int(np.argmin(lam1))
    x0, y0 = (marks.lambda1_min, marks.lambda2_under) if marks.lambda2_under is not None else (lam1[left], lam2[left])
    x1, y1 = (marks.lambda1_max, marks.lambda2_bar) if marks.lambda2_bar is not None else (lam1[right], lam2[right])
    chord = lambda x: y0 + (y1 - y0) * (x - x0) / (x1 - x0) if x1 != x0 else y0
    upper = [p for p in points if p[1] >= chord(p[0])]
    lower = [p for p in points if p[1] <= chord(p[0])]
    return HMaps(case_tag=tag, branches={'H+': make_branch(upper, None, 'H+'), 'H-': make_branch(lower, None, 'H-')})


def vertical_crossings(trace: EigencurveTrace, lam1: float) -> int:
    """Number of polyline edges crossed by the line λ1 = const."""
    count = 0
    for piece in trace.segments():
        x = piece[:, 0] - lam1
        count += int(np.sum(np.sign(x[:-1]) * np.sign(x[1:]) < 0))
    return count


def contains(trace: EigencurveTrace, lam1: float, lam2: float) -> bool:
    """Point-in-polygon test against a closed trace."""
    vertices = np.array([(p.lam1, p.lam2) for p in trace.points])
    return bool(Path(vertices, closed=True).contains_point((lam1, lam2)))
