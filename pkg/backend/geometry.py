from functools import cached_property
from typing import Callable
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from backend.errors import InvalidGeometry


logger = logging.getLogger('geometry')

MIN_NODES = 8


# Domain description read from the config file
class DomainSpec(BaseModel):
    x0: float = 0.0             # left end of Omega_1 (symmetry axis / Neumann end)
    xs: float                   # interface Sigma
    xL: float                   # outer boundary Gamma
    radial_power: int = 0       # k in the weight r^k (k = N - 1 for a radial reduction)
    n1: int = 64                # intervals on Omega_1
    n2: int = 64                # intervals on Omega_2


def radial_integral(a, b, k: int):
    """Exact value of the integral of r^k over [a, b]."""
    return (np.power(b, k + 1) - np.power(a, k + 1)) / (k + 1)


class SubMesh(BaseModel):
    """Uniform nodes on one subdomain together with the weights derived from r^k."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray
    radial_power: int = 0

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @property
    def h(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    @property
    def left(self) -> float:
        return float(self.nodes[0])

    @property
    def right(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @cached_property
    def face_weights(self) -> np.ndarray:
        return np.power(self.midpoints, self.radial_power)

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        # Dual cells: half cells at both ends
        edges = np.concatenate(([self.left], self.midpoints, [self.right]))
        return radial_integral(edges[:-1], edges[1:], self.radial_power)

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        # Composite trapezoid against r^k
        w = np.full(len(self.nodes), self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w * np.power(self.nodes, self.radial_power)

    @property
    def measure(self) -> float:
        return float(radial_integral(self.left, self.right, self.radial_power))

    def boundary_weight(self, side: str) -> float:
        """Surface factor r^k at one end ('left' or 'right')."""
        x = self.left if side == 'left' else self.right
        return float(x ** self.radial_power)


def uniform_submesh(a: float, b: float, n: int, radial_power: int = 0) -> SubMesh:
    return SubMesh(nodes=np.linspace(a, b, n + 1), radial_power=radial_power)


class Mesh(BaseModel):
    """Both subdomains; the interface node xs appears once in each part."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    spec: DomainSpec
    part1: SubMesh
    part2: SubMesh

    @property
    def nodes1(self) -> np.ndarray:
        return self.part1.nodes

    @property
    def nodes2(self) -> np.ndarray:
        return self.part2.nodes

    @property
    def h1(self) -> float:
        return self.part1.h

    @property
    def h2(self) -> float:
        return self.part2.h

    @property
    def interface_index_1(self) -> int:
        return len(self.nodes1) - 1

    @property
    def interface_index_2(self) -> int:
        return len(self.nodes1)

    @property
    def size(self) -> int:
        return len(self.nodes1) + len(self.nodes2)

    @property
    def measure1(self) -> float:
        return self.part1.measure

    @property
    def measure2(self) -> float:
        return self.part2.measure

    @property
    def interface_measure(self) -> float:
        return float(self.spec.xs ** self.spec.radial_power)

    @property
    def coordinates(self) -> np.ndarray:
        return np.concatenate((self.nodes1, self.nodes2))

    def evaluate(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        values = [np.broadcast_to(np.asarray(func(x), dtype=float), x.shape) for x in (self.nodes1, self.nodes2)]
        return np.concatenate(values)

    def split(self, vector: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vector = np.asarray(vector)
        return vector[:self.interface_index_2], vector[self.interface_index_2:]

    def refine(self, factor: int = 2) -> "Mesh":
        spec = self.spec.model_copy(update={"n1": self.spec.n1 * factor, "n2": self.spec.n2 * factor})
        return build_mesh(spec)


def check_geometry(spec: DomainSpec) -> None:
    if not spec.x0 < spec.xs < spec.xL:
        raise InvalidGeometry(f"Expected x0 < xs < xL, got x0={spec.x0}, xs={spec.xs}, xL={spec.xL}")
    if spec.n1 < MIN_NODES or spec.n2 < MIN_NODES:
        raise InvalidGeometry(f"Node counts must be at least {MIN_NODES}, got n1={spec.n1}, n2={spec.n2}")
    if spec.radial_power < 0:
        raise InvalidGeometry(f"radial_power must be >= 0, got {spec.radial_power}")
    if spec.radial_power >= 1 and spec.x0 < 0:
        raise InvalidGeometry("A radial reduction needs x0 >= 0 (x0 = 0 is the symmetry axis)")


def build_mesh(spec: DomainSpec) -> Mesh:
    check_geometry(spec)
    part1 = uniform_submesh(spec.x0, spec.xs, spec.n1, spec.radial_power)
    part2 = uniform_submesh(spec.xs, spec.xL, spec.n2, spec.radial_power)
    mesh = Mesh(spec=spec, part1=part1, part2=part2)
    logger.debug(f"Mesh built: h1={mesh.h1:.3g}, h2={mesh.h2:.3g}, |O1|={mesh.measure1:.6g}, "
                 f"|O2|={mesh.measure2:.6g}, |S|={mesh.interface_measure:.6g}")
    return mesh
