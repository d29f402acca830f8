"""Implementations of the command-line subcommands.

Every command computes first and writes its files afterwards from this
process; grids and ray sweeps may run on a worker pool.
"""
from pathlib import Path
import logging
import math

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq

from backend import export
from backend.config import RunConfig, context_for, mesh_for
from backend.curve import (CaseTag, EigencurveTrace, HMaps, H_maps, check_prediction, classify, trace_curve)
from backend.eigen import principal_eigenpair
from backend.errors import BranchSplitFailed, EigencurveError, VerificationFailed
from backend.fields import sample_field
from backend.geometry import build_mesh, uniform_submesh
from backend.logistic import LogisticProblem, existence_map, solve
from backend.operator import Boundary, BoundaryKind, assemble_interface, assemble_scalar
from backend.plots import plot_curve
from backend.verification import VerificationReport, run_suite


logger = logging.getLogger('commands')

PREDICTION_TOL = 1e-4


class CurveResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    trace: EigencurveTrace
    hmaps: HMaps | None = None
    files: list[str] = []


def show(frame: pd.DataFrame, title: str) -> None:
    print(f"\n{title}")
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.10g}"))


def observed_orders(values: list[float], sizes: list[int], exact: float | None = None) -> list[float | None]:
    """Observed convergence order between successive refinements.

    With an exact value the errors are compared directly; otherwise Richardson's
    estimate from three successive values is used.
    """
    orders: list[float | None] = [None] * len(values)
    for k in range(1, len(values)):
        ratio = math.log(sizes[k] / sizes[k - 1])
        if exact is not None:
            e0, e1 = abs(values[k - 1] - exact), abs(values[k] - exact)
            if e0 > 0 and e1 > 0:
                orders[k] = math.log(e0 / e1) / ratio
        elif k >= 2:
            d0, d1 = abs(values[k - 1] - values[k - 2]), abs(values[k] - values[k - 1])
            if d0 > 0 and d1 > 0:
                orders[k] = math.log(d0 / d1) / ratio
    return orders


def scalar_oracle(length: float, left: Boundary, right: Boundary, potential: float = 0.0) -> float | None:
    """Closed-form σ1 of -u'' + q u on an interval of the given length, flat geometry."""
    kinds = {left.kind, right.kind}
    robin = left if left.kind == BoundaryKind.ROBIN else right
    if kinds == {BoundaryKind.NEUMANN}:
        omega = 0.0
    elif kinds == {BoundaryKind.NEUMANN, BoundaryKind.DIRICHLET}:
        omega = math.pi / (2.0 * length)
    elif kinds == {BoundaryKind.DIRICHLET}:
        omega = math.pi / length
    elif kinds == {BoundaryKind.NEUMANN, BoundaryKind.ROBIN}:
        # u = cos(ω s): ω tan(ω L) = g
        g = robin.gamma
        omega = 0.0 if g == 0 else brentq(lambda w: w * math.sin(w * length) - g * math.cos(w * length),
                                          0.0, math.pi / (2.0 * length))
    elif kinds == {BoundaryKind.DIRICHLET, BoundaryKind.ROBIN}:
        # u = sin(ω s): ω cos(ω L) + g sin(ω L) = 0
        g = robin.gamma
        omega = brentq(lambda w: w * math.cos(w * length) + g * math.sin(w * length),
                       math.pi / (2.0 * length), math.pi / length)
    else:
        return None
    return omega * omega + potential


def boundary_from(kind: str, gamma: float) -> Boundary:
    if kind == 'robin':
        return Boundary.robin(gamma)
    if kind == 'dirichlet':
        return Boundary.dirichlet()
    return Boundary.neumann()


def cmd_eigen(config: RunConfig, out_dir: str | Path, dump_matrix: bool = False) -> dict[str, pd.DataFrame]:
    block = config.eigen
    rows = []
    for n in block.levels:
        mesh = build_mesh(config.domain.model_copy(update={'n1': n, 'n2': n}))
        c1 = sample_field(block.c1, mesh.part1, 1)
        c2 = sample_field(block.c2, mesh.part2, 2)
        op = assemble_interface(mesh, c1, c2, config.coupling.gamma1, config.coupling.gamma2)
        eig = principal_eigenpair(op, block.tol_eig)
        rows.append({'n': n, 'value': eig.value, 'residual': eig.residual, 'positivity_margin': eig.positivity_margin,
                     'lower': eig.lower, 'upper': eig.upper, 'iterations': eig.iterations})
    orders = observed_orders([r['value'] for r in rows], list(block.levels))
    for row, order in zip(rows, orders):
        row['order'] = order
    tables = {'interface': pd.DataFrame(rows)}
    show(tables['interface'], 'Principal eigenvalue of the interface problem')
    export.write_report(rows, out_dir, 'eigen_interface')

    if block.scalar_subdomain is not None:
        tables['scalar'] = scalar_table(config)
        show(tables['scalar'], f"Scalar problem on Omega_{block.scalar_subdomain}")
        export.write_report(tables['scalar'].to_dict('records'), out_dir, 'eigen_scalar')

    if dump_matrix:
        mesh = mesh_for(config)
        op = assemble_interface(mesh, sample_field(block.c1, mesh.part1, 1), sample_field(block.c2, mesh.part2, 2),
                                config.coupling.gamma1, config.coupling.gamma2)
        export.dump_matrix(op, out_dir)
    return tables


def scalar_table(config: RunConfig) -> pd.DataFrame:
    block = config.eigen
    spec = config.domain
    a, b = (spec.x0, spec.xs) if block.scalar_subdomain == 1 else (spec.xs, spec.xL)
    left = boundary_from(block.scalar_left, block.scalar_gamma)
    right = boundary_from(block.scalar_right, block.scalar_gamma)
    exact = scalar_oracle(b - a, left, right, block.scalar_potential) if spec.radial_power == 0 else None

    values, rows = [], []
    for n in block.levels:
        part = uniform_submesh(a, b, n, spec.radial_power)
        eig = principal_eigenpair(assemble_scalar(part, block.scalar_potential, left, right), block.tol_eig)
        values.append(eig.value)
        rows.append({'n': n, 'value': eig.value, 'oracle': exact,
                     'error': None if exact is None else abs(eig.value - exact), 'residual': eig.residual})
    for row, order in zip(rows, observed_orders(values, list(block.levels), exact)):
        row['order'] = order
    return pd.DataFrame(rows)


def branch_rows(hmaps: HMaps) -> list[dict]:
    return [{'branch': name, 'over': branch.over, 'lambda1': x, 'lambda2': y}
            for name, branch in hmaps.branches.items() for x, y in zip(branch.lam1, branch.lam2)]


def cmd_curve(config: RunConfig, out_dir: str | Path, n_rays: int | None = None, tol_curve: float | None = None,
              grid: tuple[int, int] | None = None) -> CurveResult:
    ctx = context_for(config)
    trace = trace_curve(ctx, n_rays or config.curve.n_rays, tol_curve or config.curve.tol_curve,
                        workers=config.workers)
    try:
        hmaps = H_maps(trace)
    except BranchSplitFailed as e:
        logger.warning(f"Branches not tabulated: {e.detail}")
        hmaps = None

    files = [export.write_trace(trace, out_dir), export.write_landmarks(trace.landmarks, out_dir)]
    if hmaps is not None:
        files.append(export.write_report(branch_rows(hmaps), out_dir, 'branches'))
    files.append(plot_curve(trace, ctx, Path(out_dir) / 'curve.svg', grid or config.curve.grid, config.curve.window,
                            seed=config.seed, size=(config.plot.width, config.plot.height), workers=config.workers))
    marks = {k: v for k, v in trace.landmarks.model_dump().items() if v is not None}
    show(pd.DataFrame({'landmark': list(marks), 'value': list(marks.values())}),
         f"Curve {trace.case_tag.value}: {len(trace.points)} points, closed={trace.closed}")
    return CurveResult(trace=trace, hmaps=hmaps, files=[str(f) for f in files])


def cmd_classify(config: RunConfig, out_dir: str | Path, n_rays: int | None = None) -> pd.DataFrame:
    ctx = context_for(config)
    cls = classify(ctx)
    trace = trace_curve(ctx, n_rays or config.curve.n_rays, config.curve.tol_curve, workers=config.workers)
    measured = trace.landmarks.model_dump()

    rows = [{'quantity': 'case_tag', 'predicted': cls.case_tag.value, 'measured': trace.case_tag.value,
             'agree': True},
            {'quantity': 'int_m1', 'predicted': None, 'measured': cls.int1, 'agree': True},
            {'quantity': 'int_m2', 'predicted': None, 'measured': cls.int2, 'agree': True},
            {'quantity': 'closed', 'predicted': cls.closed, 'measured': trace.closed,
             'agree': cls.closed == trace.closed}]
    for name, rule in cls.predictions.items():
        value = measured.get(name)
        rows.append({'quantity': name, 'predicted': rule, 'measured': value,
                     'agree': check_prediction(value, rule, PREDICTION_TOL)})
    if cls.monotone is not None and trace.case_tag == CaseTag.BOTH_NONNEG:
        ok = H_maps(trace).branches['H'].monotone_ok
        rows.append({'quantity': 'H', 'predicted': cls.monotone, 'measured': 'monotone' if ok else 'not monotone',
                     'agree': ok})

    frame = pd.DataFrame(rows)
    show(frame, f"Classification ({cls.case_tag.value}{', ' + cls.sub_tag if cls.sub_tag else ''})")
    export.write_report(rows, out_dir, 'classify')
    if not frame['agree'].all():
        logger.warning("Some predicted landmark signs disagree with the traced curve")
    return frame


def cmd_logistic(config: RunConfig, out_dir: str | Path, grid: tuple[int, int] | None = None) -> pd.DataFrame:
    block = config.logistic
    ctx = context_for(config)
    shape = grid or block.grid
    lam1_grid = np.linspace(*block.lam1, shape[0])
    lam2_grid = np.linspace(*block.lam2, shape[1])
    rows = existence_map(ctx, lam1_grid, lam2_grid, block.p1, block.p2, workers=config.workers)

    profiles = []
    for i, (lam1, lam2) in enumerate(block.profiles):
        prob = LogisticProblem(ctx=ctx, lam1=lam1, lam2=lam2, p1=block.p1, p2=block.p2)
        try:
            solution = solve(prob)
        except EigencurveError as e:
            logger.warning(f"No profile at ({lam1:g}, {lam2:g}): {e.detail}")
            continue
        profiles.append((i, solution))

    export.write_existence(rows, out_dir)
    for i, solution in profiles:
        export.write_solution(ctx.mesh, solution.u, out_dir, f"solution_{i}")

    frame = pd.DataFrame([r.model_dump() for r in rows])
    counts = frame['exists'].value_counts().to_dict()
    logger.info(f"Existence map: {counts}")
    show(frame.pivot(index='lam2', columns='lam1', values='exists').iloc[::-1], 'Positive solution exists')
    return frame


def cmd_verify(config: RunConfig, out_dir: str | Path, coarse: bool = False) -> VerificationReport:
    report = run_suite(config, coarse)
    export.write_report(report.rows(), out_dir, 'verify')
    show(pd.DataFrame(report.rows()), f"Verification (seed {report.seed}{', coarse mesh' if coarse else ''})")
    for warning in report.warnings:
        print(f"warning: {warning}")
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise VerificationFailed(f"Failed checks: {', '.join(failed)}")
    return report
