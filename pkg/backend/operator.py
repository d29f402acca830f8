"""Banded discretization of (-Δ + c1, -Δ + c2) with Kedem-Katchalsky coupling on Σ.

Unknowns are ordered (u1 on nodes1, u2 on nodes2), with the interface point xs
carried twice. Every row is the finite-volume balance on the dual cell of its
node, divided by the cell volume:

    (1/V_j) [ f_{j-1/2} (u_j - u_{j-1}) / h + f_{j+1/2} (u_j - u_{j+1}) / h ] + c_j u_j

where f are the radial weights r^k at cell faces. End rows close the balance
with the boundary flux: zero (Neumann), r^k γ u (Robin) or r^k γ_i (u_i - u_j)
on Σ. Coupling keeps the matrix tridiagonal and D·A symmetric for
D = (γ2 V1, γ1 V2).
"""
from enum import Enum
import logging

import numpy as np
import scipy.sparse
from pydantic import BaseModel, ConfigDict
from scipy.linalg import solve_banded

from backend.errors import InvalidCoupling
from backend.fields import CoefficientField
from backend.geometry import Mesh, SubMesh


logger = logging.getLogger('operator')


class BoundaryKind(str, Enum):
    ROBIN = 'robin'
    NEUMANN = 'neumann'
    DIRICHLET = 'dirichlet'


class Boundary(BaseModel):
    kind: BoundaryKind = BoundaryKind.NEUMANN
    gamma: float = 0.0      # Robin coefficient h in ∂νu + h u = 0

    @classmethod
    def neumann(cls) -> "Boundary":
        return cls(kind=BoundaryKind.NEUMANN)

    @classmethod
    def robin(cls, gamma: float) -> "Boundary":
        return cls(kind=BoundaryKind.ROBIN, gamma=gamma)

    @classmethod
    def dirichlet(cls) -> "Boundary":
        return cls(kind=BoundaryKind.DIRICHLET)


class BandedOperator(BaseModel):
    """Tridiagonal matrix in LAPACK banded layout plus its symmetrizing weights."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    laplacian: np.ndarray       # (3, n) bands of the c = 0 operator
    potential: np.ndarray       # nodal c added to the diagonal
    weights: np.ndarray         # D with D·A symmetric

    @property
    def size(self) -> int:
        return self.laplacian.shape[1]

    @property
    def bands(self) -> np.ndarray:
        bands = self.laplacian.copy()
        bands[1] += self.potential
        return bands

    @property
    def diagonal(self) -> np.ndarray:
        return self.laplacian[1] + self.potential

    @property
    def upper(self) -> np.ndarray:
        return self.laplacian[0, 1:]

    @property
    def lower(self) -> np.ndarray:
        return self.laplacian[2, :-1]

    @property
    def row_sums(self) -> np.ndarray:
        sums = self.diagonal.copy()
        sums[:-1] += self.upper
        sums[1:] += self.lower
        return sums

    @property
    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.diagonal) + np.concatenate((np.abs(self.upper), [0.0]))
                            + np.concatenate(([0.0], np.abs(self.lower)))))

    def with_potential(self, potential) -> "BandedOperator":
        potential = np.broadcast_to(np.asarray(potential, dtype=float), (self.size,)).copy()
        return self.model_copy(update={'potential': potential})

    def shifted(self, t: float) -> "BandedOperator":
        return self.with_potential(self.potential + t)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diagonal * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def solve(self, rhs: np.ndarray, shift: float = 0.0) -> np.ndarray:
        """Solve (A + shift·I) u = rhs."""
        bands = self.bands
        bands[1] += shift
        return solve_banded((1, 1), bands, rhs)

    def sparse(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.diags([self.lower, self.diagonal, self.upper], [-1, 0, 1], format='csr')

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def symmetrized(self) -> np.ndarray:
        """Dense D^{1/2} A D^{-1/2}, symmetric up to rounding."""
        root = np.sqrt(self.weights)
        return root[:, None] * self.dense() / root[None, :]


class InterfaceOperator(BandedOperator):
    mesh: Mesh
    gamma1: float
    gamma2: float


class ScalarOperator(BandedOperator):
    part: SubMesh
    left: Boundary
    right: Boundary
    free_nodes: np.ndarray      # node indices kept after Dirichlet elimination

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Values on every node of the part, zero at eliminated Dirichlet nodes."""
        full = np.zeros(len(self.part.nodes))
        full[self.free_nodes] = values
        return full


def nodal(c, size: int) -> np.ndarray:
    if c is None:
        return np.zeros(size)
    if isinstance(c, CoefficientField):
        c = c.values
    values = np.broadcast_to(np.asarray(c, dtype=float), (size,)).copy()
    return values


def diffusion_rows(part: SubMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lower, diagonal and upper entries of the c = 0 rows, boundary fluxes not yet added."""
    n_nodes = len(part.nodes)
    conductance = part.face_weights / part.h
    volumes = part.cell_volumes

    lower = np.zeros(n_nodes)
    upper = np.zeros(n_nodes)
    lower[1:] = -conductance / volumes[1:]
    upper[:-1] = -conductance / volumes[:-1]
    diag = -(lower + upper)
    return lower, diag, upper


def to_bands(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray) -> np.ndarray:
    # lower[i] = A[i, i-1], upper[i] = A[i, i+1]
    bands = np.zeros((3, len(diag)))
    bands[0, 1:] = upper[:-1]
    bands[1] = diag
    bands[2, :-1] = lower[1:]
    return bands


def check_coupling(gamma1: float, gamma2: float) -> None:
    if not (gamma1 > 0 and gamma2 > 0):
        raise InvalidCoupling(f"Interface coefficients must be positive, got gamma1={gamma1}, gamma2={gamma2}")


def assemble_interface(mesh: Mesh, c1=None, c2=None, gamma1: float = 1.0, gamma2: float = 1.0) -> InterfaceOperator:
    check_coupling(gamma1, gamma2)
    part1, part2 = mesh.part1, mesh.part2
    sigma = mesh.interface_measure

    lo1, d1, up1 = diffusion_rows(part1)
    lo2, d2, up2 = diffusion_rows(part2)

    # Left end of Omega_1 (axis or Neumann) carries no flux; same for Γ.
    # Σ rows: ∂νu1 = γ1 (u2 - u1), ∂νu2 = γ2 (u2 - u1), ν pointing out of Omega_1
    v1_end = part1.cell_volumes[-1]
    v2_start = part2.cell_volumes[0]
    d1[-1] += sigma * gamma1 / v1_end
    up1[-1] = -sigma * gamma1 / v1_end
    d2[0] += sigma * gamma2 / v2_start
    lo2[0] = -sigma * gamma2 / v2_start

    lower = np.concatenate((lo1, lo2))
    diag = np.concatenate((d1, d2))
    upper = np.concatenate((up1, up2))
    weights = np.concatenate((gamma2 * part1.cell_volumes, gamma1 * part2.cell_volumes))

    potential = np.concatenate((nodal(c1, len(part1.nodes)), nodal(c2, len(part2.nodes))))
    op = InterfaceOperator(laplacian=to_bands(lower, diag, upper), potential=potential, weights=weights,
                           mesh=mesh, gamma1=gamma1, gamma2=gamma2)
    logger.debug(f"Interface operator assembled: size={op.size}, gamma=({gamma1}, {gamma2})")
    return op


def assemble_scalar(part: SubMesh, c=None, left: Boundary | None = None,
                    right: Boundary | None = None) -> ScalarOperator:
    left = left or Boundary.neumann()
    right = right or Boundary.neumann()
    for side in (left, right):
        if side.kind == BoundaryKind.ROBIN and side.gamma < 0:
            raise InvalidCoupling(f"Robin coefficient must be nonnegative, got {side.gamma}")

    lower, diag, upper = diffusion_rows(part)
    volumes = part.cell_volumes
    if left.kind == BoundaryKind.ROBIN:
        diag[0] += part.boundary_weight('left') * left.gamma / volumes[0]
    if right.kind == BoundaryKind.ROBIN:
        diag[-1] += part.boundary_weight('right') * right.gamma / volumes[-1]

    # Dirichlet nodes are removed together with their coupling entries
    free = np.arange(len(part.nodes))
    if left.kind == BoundaryKind.DIRICHLET:
        free = free[1:]
    if right.kind == BoundaryKind.DIRICHLET:
        free = free[:-1]
    lower, diag, upper = lower[free].copy(), diag[free], upper[free].copy()
    lower[0] = 0.0
    upper[-1] = 0.0

    potential = nodal(c, len(part.nodes))[free]
    return ScalarOperator(laplacian=to_bands(lower, diag, upper), potential=potential, weights=volumes[free].copy(),
                          part=part, left=left, right=right, free_nodes=free)
