from functools import partial
from multiprocessing import Pool
from pathlib import Path
import logging
import math

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap

from backend.curve import EigencurveTrace
from backend.spectral_maps import SpectralContext, eval_F


logger = logging.getLogger('plots')

REGION_COLORS = ListedColormap(['#f4c7c3', '#ffffff', '#c9e4c5'])    # F < 0, F = 0, F > 0


def plot_window(trace: EigencurveTrace, window: list[float] | None = None) -> tuple[float, float, float, float]:
    if window is not None:
        return tuple(window)
    lam1, lam2 = trace.lam1, trace.lam2
    span = max(float(np.ptp(lam1)), float(np.ptp(lam2)), 1.0)
    pad = 0.15 * span
    return (float(lam1.min()) - pad, float(lam1.max()) + pad, float(lam2.min()) - pad, float(lam2.max()) + pad)


def sign_cell(point: tuple[float, float], ctx: SpectralContext) -> float:
    return eval_F(point[0], point[1], ctx)


def sign_grid(ctx: SpectralContext, window, shape: tuple[int, int], workers: int = 1):
    xs = np.linspace(window[0], window[1], shape[0])
    ys = np.linspace(window[2], window[3], shape[1])
    points = [(float(x), float(y)) for y in ys for x in xs]
    task = partial(sign_cell, ctx=ctx)
    if workers > 1:
        with Pool(workers) as pool:
            values = pool.map(task, points)
    else:
        values = [task(p) for p in points]
    return xs, ys, np.array(values).reshape(len(ys), len(xs))


def plot_curve(trace: EigencurveTrace, ctx: SpectralContext, path: str | Path, grid: tuple[int, int] = (61, 61),
               window: list[float] | None = None, seed: int = 0, size: tuple[float, float] = (6.0, 5.0),
               workers: int = 1) -> Path:
    """SVG of the curve over the sign regions of F, with its landmarks."""
    plt.rcParams['svg.hashsalt'] = str(seed)
    plt.rcParams['svg.fonttype'] = 'path'
    box = plot_window(trace, window)
    xs, ys, values = sign_grid(ctx, box, grid, workers)

    fig, ax = plt.subplots(figsize=size)
    ax.pcolormesh(xs, ys, np.sign(values), cmap=REGION_COLORS, vmin=-1, vmax=1, shading='nearest')
    for piece in trace.segments():
        ax.plot(piece[:, 0], piece[:, 1], color='black', linewidth=1.2)
    ax.plot([0.0], [0.0], 'ko', markersize=3)

    marks = trace.landmarks
    for value, label in ((marks.Lambda2_plus, r'$\Lambda_2^+$'), (marks.Lambda2_minus, r'$\Lambda_2^-$')):
        if value is not None and box[2] <= value <= box[3]:
            ax.axhline(value, color='tab:blue', linestyle='--', linewidth=0.8)
            ax.annotate(label, (box[0], value), textcoords='offset points', xytext=(4, 3), color='tab:blue')
    if marks.lambda1_max is not None and marks.lambda2_bar is not None:
        ax.plot([marks.lambda1_max], [marks.lambda2_bar], 's', color='tab:red', markersize=5,
                label=r'$(\lambda_1^{max}, \bar\lambda_2)$')
    if marks.lambda1_min is not None and marks.lambda2_under is not None:
        ax.plot([marks.lambda1_min], [marks.lambda2_under], 's', color='tab:purple', markersize=5,
                label=r'$(\lambda_1^{min}, \underline{\lambda}_2)$')
    if marks.mu_star is not None:
        reach = max(abs(b) for b in box)
        norm = math.hypot(1.0, marks.mu_star)
        tx, ty = reach / norm, reach * marks.mu_star / norm
        ax.plot([-tx, tx], [-ty, ty], color='tab:gray', linestyle=':', linewidth=0.8, label=r'$\mu^*$ ray')

    ax.set_xlim(box[0], box[1])
    ax.set_ylim(box[2], box[3])
    ax.set_xlabel(r'$\lambda_1$')
    ax.set_ylabel(r'$\lambda_2$')
    ax.set_title(trace.case_tag.value + (f" ({trace.sub_tag})" if trace.sub_tag else ''))
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc='best', fontsize='small')

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path
