from pathlib import Path
import logging

import numpy as np
import pandas as pd

from backend.curve import EigencurveTrace, Landmarks
from backend.geometry import Mesh
from backend.logistic import ExistenceRow
from backend.operator import BandedOperator


logger = logging.getLogger('export')

FLOAT_FORMAT = '%.12g'


def ensure_dir(out_dir: str | Path) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def format_value(value) -> str:
    if value is None:
        return 'none'
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def header_block(items: dict) -> str:
    return ''.join(f"# {key} = {format_value(value)}\n" for key, value in items.items())


def write_table(frame: pd.DataFrame, path: Path, header: dict | None = None) -> Path:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        if header:
            f.write(header_block(header))
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Wrote {path}")
    return path


def trace_frame(trace: EigencurveTrace) -> pd.DataFrame:
    return pd.DataFrame({
        't': [p.t for p in trace.points],
        'lambda1': [p.lam1 for p in trace.points],
        'lambda2': [p.lam2 for p in trace.points],
        'abs_F': [p.residual for p in trace.points],
        'segment': [p.segment for p in trace.points],
    })


def write_trace(trace: EigencurveTrace, out_dir: str | Path, stem: str = 'trace') -> Path:
    header = {'case_tag': trace.case_tag.value, 'sub_tag': trace.sub_tag, 'closed': trace.closed,
              'n_rays': trace.n_rays, **trace.landmarks.model_dump()}
    return write_table(trace_frame(trace), ensure_dir(out_dir) / f"{stem}.csv", header)


def write_landmarks(landmarks: Landmarks, out_dir: str | Path, stem: str = 'landmarks') -> Path:
    path = ensure_dir(out_dir) / f"{stem}.txt"
    lines = ''.join(f"{key} = {format_value(value)}\n" for key, value in landmarks.model_dump().items())
    path.write_text(lines, encoding='utf-8')
    logger.info(f"Wrote {path}")
    return path


def write_existence(rows: list[ExistenceRow], out_dir: str | Path, stem: str = 'existence') -> Path:
    frame = pd.DataFrame([r.model_dump() for r in rows], columns=list(ExistenceRow.model_fields))
    return write_table(frame, ensure_dir(out_dir) / f"{stem}.csv")


def solution_frame(mesh: Mesh, u: np.ndarray) -> pd.DataFrame:
    u1, u2 = mesh.split(u)
    return pd.DataFrame({
        'x': np.concatenate((mesh.nodes1, mesh.nodes2)),
        'subdomain': np.concatenate((np.full(len(u1), 1), np.full(len(u2), 2))),
        'u': np.concatenate((u1, u2)),
    })


def write_solution(mesh: Mesh, u: np.ndarray, out_dir: str | Path, stem: str) -> Path:
    return write_table(solution_frame(mesh, u), ensure_dir(out_dir) / f"{stem}.csv")


def write_report(rows: list[dict], out_dir: str | Path, stem: str) -> Path:
    return write_table(pd.DataFrame(rows), ensure_dir(out_dir) / f"{stem}.csv")


def dump_matrix(op: BandedOperator, out_dir: str | Path, stem: str = 'matrix') -> Path:
    """Dense assembled matrix, one row per line."""
    path = ensure_dir(out_dir) / f"{stem}.txt"
    np.savetxt(path, op.dense(), fmt='%.17g')
    logger.info(f"Wrote {path}")
    return path
