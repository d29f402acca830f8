"""Positive solutions of -Δu_i = λ_i m_i u_i - u_i^{p_i} with the interface coupling.

With A_λ the interface operator at potentials (-λ1 m1, -λ2 m2), a discrete
solution satisfies R(u) = A_λ u + u^p = 0. The monotone map

    (A_λ + Θ I) u_new = Θ u - u^p,     Θ = max_i p_i max(v)^{p_i - 1},

is order-preserving on [0, v] for the current downward iterate v, so it is run
from the subsolution εφ upward and from the supersolution K downward; the
solution stays sandwiched between the two sequences.
"""
from functools import partial
from multiprocessing import Pool
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from backend.eigen import principal_eigenpair
from backend.errors import Indeterminate, NonConvergence, NotSubcritical, UniquenessGap
from backend.operator import BandedOperator
from backend.spectral_maps import SpectralContext
from backend.curve import TOL_CURVE


logger = logging.getLogger('logistic')

TOL_MARGIN = 10 * TOL_CURVE
TOL_NL = 1e-9
TOL_UNIQ = 1e-8
MAX_ITER = 20_000
EPS_SAFETY = 0.9
K_SAFETY = 1.1


class LogisticProblem(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ctx: SpectralContext
    lam1: float
    lam2: float
    p1: float = Field(default=2.0, gt=1.0)
    p2: float = Field(default=2.0, gt=1.0)

    @property
    def exponents(self) -> np.ndarray:
        mesh = self.ctx.mesh
        return np.concatenate((np.full(len(mesh.nodes1), self.p1), np.full(len(mesh.nodes2), self.p2)))

    def operator(self) -> BandedOperator:
        return self.ctx.operator(self.lam1, self.lam2)


class Bracket(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    epsilon: float
    K: float
    phi: np.ndarray             # principal eigenfunction at (-λ1 m1, -λ2 m2), max 1
    F: float


class LogisticSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u: np.ndarray
    residual: float             # ‖A_λ u + u^p‖∞
    iterations: int
    epsilon: float
    K: float
    gap: float                  # ‖downward - upward‖∞ at stop
    upward: np.ndarray
    downward: np.ndarray
    polished: bool = False


class ExistenceRow(BaseModel):
    lam1: float
    lam2: float
    F: float
    exists: str                 # true, false or indeterminate
    sup_u: float | None = None
    iterations: int | None = None


def nonlinear_residual(op: BandedOperator, u: np.ndarray, p: np.ndarray) -> np.ndarray:
    return op.matvec(u) + np.power(np.maximum(u, 0.0), p)


def existence_check(prob: LogisticProblem, tol_margin: float = TOL_MARGIN) -> bool:
    F = prob.ctx.eigenpair(prob.lam1, prob.lam2).value
    if abs(F) <= tol_margin:
        raise Indeterminate(f"F({prob.lam1:g}, {prob.lam2:g}) = {F:.3e} is within {tol_margin:g} of the curve")
    return F < 0


def bracket(prob: LogisticProblem, tol_margin: float = TOL_MARGIN) -> Bracket:
    eig = prob.ctx.eigenpair(prob.lam1, prob.lam2)
    F = eig.value
    if F >= -tol_margin:
        raise NotSubcritical(f"F({prob.lam1:g}, {prob.lam2:g}) = {F:.3e} is not below -{tol_margin:g}")

    ctx = prob.ctx
    pairs = ((prob.lam1, ctx.m1, prob.p1), (prob.lam2, ctx.m2, prob.p2))
    K = K_SAFETY * max((abs(lam) * m.sup_norm) ** (1.0 / (p - 1.0)) for lam, m, p in pairs)
    epsilon = EPS_SAFETY * min((-F) ** (1.0 / (p - 1.0)) for _, _, p in pairs)
    epsilon = min(epsilon, K)
    return Bracket(epsilon=epsilon, K=K, phi=eig.eigenfunction, F=F)


def monotone_step(op: BandedOperator, u: np.ndarray, p: np.ndarray, theta: float) -> np.ndarray:
    return op.solve(theta * u - np.power(np.maximum(u, 0.0), p), shift=theta)


def theta_for(v: np.ndarray, p: np.ndarray) -> float:
    return float(np.max(p * np.power(np.max(v), p - 1.0)))


def newton_polish(op: BandedOperator, u: np.ndarray, p: np.ndarray, low: np.ndarray, high: np.ndarray,
                  steps: int = 3) -> tuple[np.ndarray, bool]:
    """Newton steps on R(u) = 0, kept only while they stay inside [low, high] and reduce R."""
    best = u
    best_res = float(np.max(np.abs(nonlinear_residual(op, u, p))))
    improved = False
    for _ in range(steps):
        jacobian = op.with_potential(op.potential + p * np.power(np.maximum(best, 0.0), p - 1.0))
        candidate = best - jacobian.solve(nonlinear_residual(op, best, p))
        slack = 1e-12 * max(1.0, float(np.max(high)))
        if np.any(candidate < low - slack) or np.any(candidate > high + slack):
            break
        res = float(np.max(np.abs(nonlinear_residual(op, candidate, p))))
        if res >= best_res:
            break
        best, best_res, improved = candidate, res, True
    return best, improved


def solve(prob: LogisticProblem, tol_uniq: float = TOL_UNIQ, max_iter: int = MAX_ITER, polish: bool = True,
          tol_margin: float = TOL_MARGIN) -> LogisticSolution:
    if not existence_check(prob, tol_margin):
        raise NotSubcritical(f"No positive solution at ({prob.lam1:g}, {prob.lam2:g}): F >= 0")
    br = bracket(prob, tol_margin)
    op = prob.operator()
    p = prob.exponents

    w = br.epsilon * br.phi
    v = np.full(op.size, br.K)
    slack = 1e-12 * br.K
    warned = False
    stalled = 0

    for iteration in range(1, max_iter + 1):
        theta = theta_for(v, p)
        w_new = monotone_step(op, w, p, theta)
        v_new = monotone_step(op, v, p, theta)

        if not warned and (np.any(w_new < w - slack) or np.any(v_new > v + slack) or np.any(w_new > v_new + slack)):
            logger.warning(f"Monotone ordering drifted at iteration {iteration} "
                           f"({prob.lam1:g}, {prob.lam2:g})")
            warned = True

        step = max(float(np.max(np.abs(w_new - w))), float(np.max(np.abs(v_new - v))))
        w, v = w_new, v_new
        gap = float(np.max(np.abs(v - w)))
        if gap <= tol_uniq:
            break
        stalled = stalled + 1 if step <= 1e-15 * max(1.0, float(np.max(v))) else 0
        if stalled >= 5:
            raise UniquenessGap(f"Upward and downward limits differ by {gap:.3e} at ({prob.lam1:g}, {prob.lam2:g})")
    else:
        raise NonConvergence(f"Monotone iteration did not close the gap after {max_iter} iterations "
                             f"({prob.lam1:g}, {prob.lam2:g})")

    u = 0.5 * (v + w)
    polished = False
    if polish:
        u, polished = newton_polish(op, u, p, w, v)
    residual = float(np.max(np.abs(nonlinear_residual(op, u, p))))
    logger.debug(f"Logistic solve ({prob.lam1:g}, {prob.lam2:g}): {iteration} iterations, gap {gap:.2e}, "
                 f"residual {residual:.2e}")
    return LogisticSolution(u=u, residual=residual, iterations=iteration, epsilon=br.epsilon, K=br.K, gap=gap,
                            upward=w, downward=v, polished=polished)


def linearized_eigenvalue(prob: LogisticProblem, solution: LogisticSolution) -> float:
    """Λ1(-λ1 m1 + u1^{p1-1}, -λ2 m2 + u2^{p2-1}), zero at a solution."""
    op = prob.operator()
    p = prob.exponents
    shifted = op.with_potential(op.potential + np.power(solution.u, p - 1.0))
    return principal_eigenpair(shifted, prob.ctx.tol_eig).value


def decay_run(prob: LogisticProblem, u0: np.ndarray | None = None, n_iter: int = 200) -> list[float]:
    """Sup norms of the monotone iterates from a positive start; they fall to 0 when F > 0."""
    op = prob.operator()
    p = prob.exponents
    ctx = prob.ctx
    if u0 is None:
        level = max((abs(lam) * m.sup_norm) ** (1.0 / (pp - 1.0))
                    for lam, m, pp in ((prob.lam1, ctx.m1, prob.p1), (prob.lam2, ctx.m2, prob.p2)))
        u0 = np.full(op.size, K_SAFETY * max(level, 1.0))
    u = np.asarray(u0, dtype=float)
    history = [float(np.max(u))]
    for _ in range(n_iter):
        u = monotone_step(op, u, p, theta_for(u, p))
        history.append(float(np.max(u)))
    return history


def existence_cell(point: tuple[float, float], ctx: SpectralContext, p1: float, p2: float,
                   tol_margin: float) -> ExistenceRow:
    lam1, lam2 = point
    prob = LogisticProblem(ctx=ctx, lam1=lam1, lam2=lam2, p1=p1, p2=p2)
    F = ctx.eigenpair(lam1, lam2).value
    if abs(F) <= tol_margin:
        return ExistenceRow(lam1=lam1, lam2=lam2, F=F, exists='indeterminate')
    if F > 0:
        history = decay_run(prob)
        return ExistenceRow(lam1=lam1, lam2=lam2, F=F, exists='false', sup_u=history[-1])
    solution = solve(prob, tol_margin=tol_margin)
    return ExistenceRow(lam1=lam1, lam2=lam2, F=F, exists='true', sup_u=float(np.max(solution.u)),
                        iterations=solution.iterations)


def existence_map(ctx: SpectralContext, lam1_grid, lam2_grid, p1: float = 2.0, p2: float = 2.0,
                  tol_margin: float = TOL_MARGIN, workers: int = 1) -> list[ExistenceRow]:
    points = [(float(a), float(b)) for a in lam1_grid for b in lam2_grid]
    task = partial(existence_cell, ctx=ctx, p1=p1, p2=p2, tol_margin=tol_margin)
    logger.info(f"Existence map on {len(points)} cells")
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(task, points)
    return [task(pt) for pt in points]
