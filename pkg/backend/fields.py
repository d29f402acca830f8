from enum import Enum
from typing import Callable, Literal
import logging

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, model_validator
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from backend.errors import AllZero, ConfigError
from backend.geometry import SubMesh


logger = logging.getLogger('fields')

ZERO_THRESHOLD = 1e-12

# Names accepted by the weight expression grammar
X = sympy.Symbol('x', real=True)
ALLOWED_NAMES = {
    'x': X,
    'min': sympy.Min,
    'max': sympy.Max,
    'sin': sympy.sin,
    'cos': sympy.cos,
    'exp': sympy.exp,
    'pi': sympy.pi,
}
ALLOWED_FUNCTIONS = (sympy.Min, sympy.Max, sympy.sin, sympy.cos, sympy.exp)
PARSER_GLOBALS = {
    'Integer': sympy.Integer,
    'Float': sympy.Float,
    'Rational': sympy.Rational,
    'Symbol': sympy.Symbol,
    'Function': sympy.Function,
}


class SignClass(str, Enum):
    NONNEG = 'nonneg_nontrivial'
    NONPOS = 'nonpos_nontrivial'
    CHANGES = 'changes_sign'
    ZERO = 'zero'


# Field definition as written in a config file
class FieldDefinition(BaseModel):
    kind: Literal['constant', 'piecewise', 'sampled', 'expression'] = 'constant'
    value: float = 0.0                  # constant
    breakpoints: list[float] = []       # piecewise: interior breakpoints (right-continuous)
    values: list[float] = []            # piecewise: len(breakpoints) + 1 levels / sampled: values at points
    points: list[float] = []            # sampled: abscissae, linear interpolation between them
    expression: str | None = None       # expression in x

    @model_validator(mode='before')
    @classmethod
    def shorthand(cls, data):
        # `m1 = 1.5` and `m1 = "x - 0.75"` are accepted in config files
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return {'kind': 'constant', 'value': data}
        if isinstance(data, str):
            return {'kind': 'expression', 'expression': data}
        return data

    @model_validator(mode='after')
    def check_shape(self):
        if self.kind == 'piecewise':
            if len(self.values) != len(self.breakpoints) + 1:
                raise ValueError("piecewise field needs len(values) == len(breakpoints) + 1")
            if np.any(np.diff(self.breakpoints) <= 0):
                raise ValueError("piecewise breakpoints must be strictly increasing")
        if self.kind == 'sampled':
            if len(self.points) < 2 or len(self.points) != len(self.values):
                raise ValueError("sampled field needs at least two points and one value per point")
            if np.any(np.diff(self.points) <= 0):
                raise ValueError("sampled points must be strictly increasing")
        if self.kind == 'expression' and not self.expression:
            raise ValueError("expression field needs an expression")
        return self

    def evaluator(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.kind == 'constant':
            return lambda x: np.full(np.shape(x), self.value, dtype=float)
        if self.kind == 'piecewise':
            levels = np.asarray(self.values, dtype=float)
            return lambda x: levels[np.searchsorted(self.breakpoints, x, side='right')]
        if self.kind == 'sampled':
            return lambda x: np.interp(x, self.points, self.values)
        return compile_expression(self.expression)


def compile_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Parse an arithmetic expression in x and return a vectorized callable."""
    try:
        expr = parse_expr(text, local_dict=dict(ALLOWED_NAMES), global_dict=dict(PARSER_GLOBALS),
                          transformations=standard_transformations, evaluate=True)
    except Exception as e:
        raise ConfigError(f"Cannot parse weight expression '{text}': {e}")

    unknown = {str(s) for s in expr.free_symbols} - {'x'}
    if unknown:
        raise ConfigError(f"Unknown names in weight expression '{text}': {sorted(unknown)}")
    for node in sympy.preorder_traversal(expr):
        if isinstance(node, sympy.Function) and not isinstance(node, ALLOWED_FUNCTIONS):
            raise ConfigError(f"Function '{node.func}' is not allowed in weight expression '{text}'")

    # amax/amin do not broadcast scalar arguments against arrays
    expr = expr.replace(lambda e: isinstance(e, (sympy.Min, sympy.Max)), lambda e: e.rewrite(sympy.Piecewise))
    func = sympy.lambdify(X, expr, modules='numpy')
    return lambda x: np.broadcast_to(np.asarray(func(np.asarray(x, dtype=float)), dtype=float), np.shape(x)).copy()


class ZeroSet(BaseModel):
    intervals: list[tuple[float, float]] = []
    index_ranges: list[tuple[int, int]] = []    # first and last node of each run
    interior_flags: list[bool] = []

    @property
    def empty(self) -> bool:
        return not self.intervals

    @property
    def interior_flag(self) -> bool:
        return bool(self.interior_flags) and all(self.interior_flags)

    def largest(self) -> int:
        lengths = [b - a for a, b in self.intervals]
        return int(np.argmax(lengths))


class CoefficientField(BaseModel):
    """Samples of a weight m_i or potential c_i on one subdomain."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    subdomain: Literal[1, 2]
    kind: str = 'sampled'
    values: np.ndarray
    part: SubMesh

    @property
    def tau_zero(self) -> float:
        return default_tau(self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def sign_class(self) -> SignClass:
        return classify_sign(self)

    @property
    def integral(self) -> float:
        return integrate(self)

    def with_values(self, values: np.ndarray) -> "CoefficientField":
        return CoefficientField(subdomain=self.subdomain, kind='sampled', values=np.asarray(values, dtype=float),
                                part=self.part)

    def __neg__(self) -> "CoefficientField":
        return self.with_values(-self.values)

    def __mul__(self, factor: float) -> "CoefficientField":
        return self.with_values(factor * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        return self.with_values(self.values + other.values)


def default_tau(values: np.ndarray) -> float:
    return ZERO_THRESHOLD * float(np.max(np.abs(values))) if len(values) else 0.0


def sample_field(definition: FieldDefinition, part: SubMesh, subdomain: int) -> CoefficientField:
    values = np.asarray(definition.evaluator()(part.nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"Field on subdomain {subdomain} is not finite at every node")
    return CoefficientField(subdomain=subdomain, kind=definition.kind, values=values, part=part)


def constant_field(value: float, part: SubMesh, subdomain: int) -> CoefficientField:
    return CoefficientField(subdomain=subdomain, kind='constant', values=np.full(len(part.nodes), float(value)),
                            part=part)


def classify_sign(field: CoefficientField, tau: float | None = None, require_nontrivial: bool = False) -> SignClass:
    tau = field.tau_zero if tau is None else tau
    positive = bool(np.any(field.values > tau))
    negative = bool(np.any(field.values < -tau))
    if positive and negative:
        return SignClass.CHANGES
    if positive:
        return SignClass.NONNEG
    if negative:
        return SignClass.NONPOS
    if require_nontrivial:
        raise AllZero(f"Weight on subdomain {field.subdomain} vanishes identically")
    return SignClass.ZERO


def integrate(field: CoefficientField) -> float:
    """Composite trapezoid of the samples against r^k."""
    return float(field.values @ field.part.quadrature_weights)


def zero_set(field: CoefficientField, tau: float | None = None) -> ZeroSet:
    tau = field.tau_zero if tau is None else tau
    mask = field.values <= tau
    nodes = field.part.nodes
    last = len(nodes) - 1

    # Maximal runs of consecutive flagged nodes
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1

    result = ZeroSet()
    for i, j in zip(starts, stops):
        result.intervals.append((float(nodes[i]), float(nodes[j])))
        result.index_ranges.append((int(i), int(j)))
        result.interior_flags.append(bool(i > 0 and j < last))
    return result
