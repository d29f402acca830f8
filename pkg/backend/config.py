from pathlib import Path
import logging
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from backend.errors import ConfigError
from backend.fields import FieldDefinition, sample_field
from backend.geometry import DomainSpec, Mesh, build_mesh
from backend.spectral_maps import R_CAP, SpectralContext, build_context


load_dotenv()

logger = logging.getLogger('config')

DEFAULT_OUT_DIR = os.getenv("EIGENCURVE_OUT_DIR", "out")
DEFAULT_LOG_LEVEL = os.getenv("EIGENCURVE_LOG_LEVEL", "INFO")
DEFAULT_WORKERS = int(os.getenv("EIGENCURVE_WORKERS", "1"))


class WeightsBlock(BaseModel):
    m1: FieldDefinition
    m2: FieldDefinition


class CouplingBlock(BaseModel):
    gamma1: float = 1.0
    gamma2: float = 1.0


class EigenBlock(BaseModel):
    c1: FieldDefinition = FieldDefinition(kind='constant', value=0.0)
    c2: FieldDefinition = FieldDefinition(kind='constant', value=0.0)
    levels: list[int] = [32, 64, 128, 256]      # mesh sizes of the refinement table
    tol_eig: float = Field(default=1e-10, gt=0)
    # Optional scalar problem on one subdomain, checked against its closed form
    scalar_subdomain: int | None = None
    scalar_left: str = 'neumann'
    scalar_right: str = 'robin'
    scalar_gamma: float = 1.0
    scalar_potential: float = 0.0


class CurveBlock(BaseModel):
    n_rays: int = Field(default=512, ge=64)
    tol_curve: float = Field(default=1e-6, gt=0)
    r_cap: float = Field(default=R_CAP, gt=0)
    grid: tuple[int, int] = (61, 61)            # background F samples of the plot
    window: list[float] | None = None           # [λ1 low, λ1 high, λ2 low, λ2 high]


class LogisticBlock(BaseModel):
    p1: float = Field(default=2.0, gt=1.0)
    p2: float = Field(default=2.0, gt=1.0)
    lam1: tuple[float, float] = (-5.0, 5.0)
    lam2: tuple[float, float] = (-5.0, 5.0)
    grid: tuple[int, int] = (11, 11)
    profiles: list[tuple[float, float]] = []    # points whose solution profile is exported


class VerifyBlock(BaseModel):
    draws: int = Field(default=20, ge=1)
    segments: int = Field(default=20, ge=1)


class PlotBlock(BaseModel):
    width: float = Field(default=6.0, gt=0)     # inches
    height: float = Field(default=5.0, gt=0)


class RunConfig(BaseModel):
    name: str = 'run'
    seed: int = 0
    out_dir: str = DEFAULT_OUT_DIR
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)
    domain: DomainSpec
    weights: WeightsBlock
    coupling: CouplingBlock = CouplingBlock()
    eigen: EigenBlock = EigenBlock()
    curve: CurveBlock = CurveBlock()
    logistic: LogisticBlock = LogisticBlock()
    verify: VerifyBlock = VerifyBlock()
    plot: PlotBlock = PlotBlock()

    @field_validator('out_dir')
    @classmethod
    def writable(cls, value: str) -> str:
        parent = Path(value).resolve()
        while not parent.exists():
            parent = parent.parent
        if not os.access(parent, os.W_OK):
            raise ValueError(f"output directory {value} is not writable")
        return value

    @model_validator(mode='after')
    def check_windows(self):
        for low, high in (self.logistic.lam1, self.logistic.lam2):
            if not low < high:
                raise ValueError("logistic ranges need low < high")
        if self.curve.window is not None and len(self.curve.window) != 4:
            raise ValueError("curve.window needs four numbers")
        return self


def key_line(text: str, loc: tuple) -> int | None:
    """Line of the TOML key addressed by a pydantic error location."""
    keys = [str(k) for k in loc if not isinstance(k, int)]
    if not keys:
        return None
    table, key = keys[:-1], keys[-1]
    current: list[str] = []
    fallback = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r'^\[([^\[\]]+)\]$', stripped)
        if header:
            current = [part.strip() for part in header.group(1).split('.')]
            if current == keys:
                fallback = number
            continue
        match = re.match(r'^([A-Za-z0-9_]+)\s*=', stripped)
        if match and match.group(1) == key:
            if current == table:
                return number
            fallback = fallback or number
    return fallback


def describe(error: ValidationError, text: str, path: str) -> str:
    lines = []
    for item in error.errors():
        where = '.'.join(str(k) for k in item['loc'])
        number = key_line(text, item['loc'])
        prefix = f"{path}:{number}" if number else path
        lines.append(f"{prefix}: {where}: {item['msg']}")
    return '\n'.join(lines)


def parse_config(text: str, path: str = '<config>', overrides: dict | None = None) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        target = data
        *parents, leaf = dotted.split('.')
        for key in parents:
            target = target.setdefault(key, {})
        target[leaf] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(describe(e, text, path))


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    config = parse_config(text, path, overrides)
    logger.info(f"Loaded config '{config.name}' from {path}")
    return config


def mesh_for(config: RunConfig, n1: int | None = None, n2: int | None = None) -> Mesh:
    spec = config.domain
    if n1 is not None or n2 is not None:
        spec = spec.model_copy(update={'n1': n1 or spec.n1, 'n2': n2 or spec.n2})
    return build_mesh(spec)


def context_for(config: RunConfig, mesh: Mesh | None = None) -> SpectralContext:
    mesh = mesh or mesh_for(config)
    m1 = sample_field(config.weights.m1, mesh.part1, 1)
    m2 = sample_field(config.weights.m2, mesh.part2, 2)
    return build_context(mesh, m1, m2, config.coupling.gamma1, config.coupling.gamma2,
                         tol_eig=config.eigen.tol_eig, r_cap=config.curve.r_cap)
