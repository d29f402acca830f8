import logging

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict
from scipy.linalg import solve_banded

from backend.errors import DimensionTooLarge, NoConvergence, NoPositivityCertificate
from backend.operator import BandedOperator


logger = logging.getLogger('eigen')

TOL_EIG = 1e-10
MAX_ITER = 10_000
POSITIVITY_TOL = 1e-12
DENSE_LIMIT = 400
# Attainable residual of a stored vector, in units of eps·‖A‖∞
ROUNDING_FLOOR = 8.0
STALL_FLOOR = 64.0
STALL_STEPS = 20

floor_warned: set[int] = set()


class EigenResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float
    eigenfunction: np.ndarray       # max-norm 1
    residual: float                 # ‖Aφ - value·φ‖∞
    positivity_margin: float        # min component of φ
    iterations: int
    lower: float                    # Collatz-Wielandt bracket of the value
    upper: float


class DenseSpectrum(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray              # sorted by real part
    vectors: np.ndarray             # columns match values
    principal_index: int | None     # eigenvalue owning a one-signed eigenvector

    @property
    def principal_value(self) -> float:
        if self.principal_index is None:
            raise NoPositivityCertificate("No eigenvector of one sign in the dense spectrum")
        return float(self.values[self.principal_index].real)

    @property
    def principal_vector(self) -> np.ndarray:
        vector = self.vectors[:, self.principal_index].real
        return vector / vector[np.argmax(np.abs(vector))]


def collatz_wielandt(op: BandedOperator, phi: np.ndarray) -> tuple[float, float]:
    """Bracket [min (Aφ)_i/φ_i, max (Aφ)_i/φ_i] of the principal eigenvalue, for φ > 0."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0):
        raise NoPositivityCertificate("Collatz-Wielandt bounds need a strictly positive vector")
    ratios = op.matvec(phi) / phi
    return float(np.min(ratios)), float(np.max(ratios))


def rayleigh_quotient(op: BandedOperator, x: np.ndarray) -> float:
    # D·A is symmetric, so this is the Rayleigh quotient of the symmetrized matrix
    dx = op.weights * x
    return float(dx @ op.matvec(x) / (dx @ x))


def principal_eigenpair(op: BandedOperator, tol_eig: float = TOL_EIG, max_iter: int = MAX_ITER,
                        start: np.ndarray | None = None) -> EigenResult:
    """Inverse iteration with a shift kept below the principal eigenvalue.

    The shift starts at the Gershgorin bound and is raised to the Collatz-Wielandt
    lower bound of each positive iterate, so A - sI stays a nonsingular M-matrix.
    Stops at the absolute residual tol_eig, or at the rounding floor of the
    operator when tol_eig lies below it.
    """
    bands = op.bands
    n = op.size
    scale = max(1.0, op.norm_inf)
    eps = float(np.finfo(float).eps)
    target = max(tol_eig, ROUNDING_FLOOR * eps * scale)
    if target > tol_eig and op.size not in floor_warned:
        floor_warned.add(op.size)
        logger.warning(f"tol_eig={tol_eig:g} is below the rounding floor {target:.2e} of a {op.size}-unknown operator; "
                       f"using the floor")
    shift = float(np.min(op.row_sums)) - 1.0
    x = np.ones(n) if start is None else np.abs(np.asarray(start, dtype=float)) + POSITIVITY_TOL

    value, residual = np.nan, np.inf
    best, stalled = np.inf, 0
    for iteration in range(1, max_iter + 1):
        shifted = bands.copy()
        shifted[1] -= shift
        y = solve_banded((1, 1), shifted, x, check_finite=False)
        if not np.all(np.isfinite(y)):
            raise NoConvergence(f"Inverse iteration produced non-finite values at iteration {iteration}")
        x = y / y[np.argmax(np.abs(y))]

        ax = op.matvec(x)
        value = rayleigh_quotient(op, x)
        residual = float(np.max(np.abs(ax - value * x)))
        if residual <= target:
            break
        if residual <= STALL_FLOOR * eps * scale:
            # Rounding noise: stop once the residual no longer improves
            best, stalled = (residual, 0) if residual < 0.5 * best else (best, stalled + 1)
            if stalled >= STALL_STEPS:
                logger.warning(f"Inverse iteration stalled at residual {residual:.2e} (size {op.size})")
                break

        if np.all(x > 0):
            guard = 1e-10 * (1.0 + abs(shift)) + 1e-12 * scale
            shift = max(shift, float(np.min(ax / x)) - guard)
    else:
        raise NoConvergence(f"Inverse iteration did not reach tolerance after {max_iter} iterations "
                            f"(residual {residual:.3e})")

    margin = float(np.min(x))
    if margin < -POSITIVITY_TOL:
        raise NoPositivityCertificate(f"Converged eigenvector has a negative component ({margin:.3e})")
    lower, upper = collatz_wielandt(op, np.maximum(x, np.finfo(float).tiny)) if margin > 0 else (value, value)

    logger.debug(f"Principal eigenvalue {value:.12g} after {iteration} iterations (residual {residual:.2e})")
    return EigenResult(value=value, eigenfunction=x, residual=residual, positivity_margin=margin,
                       iterations=iteration, lower=lower, upper=upper)


def principal_interface(op: BandedOperator, tol_eig: float = TOL_EIG, max_iter: int = MAX_ITER) -> EigenResult:
    return principal_eigenpair(op, tol_eig, max_iter)


def principal_scalar(op: BandedOperator, tol_eig: float = TOL_EIG, max_iter: int = MAX_ITER) -> EigenResult:
    return principal_eigenpair(op, tol_eig, max_iter)


def dense_oracle(op: BandedOperator | np.ndarray) -> DenseSpectrum:
    """Full spectrum by the LAPACK QR algorithm, with the one-signed eigenvector identified."""
    matrix = op.dense() if isinstance(op, BandedOperator) else np.asarray(op, dtype=float)
    if matrix.shape[0] > DENSE_LIMIT:
        raise DimensionTooLarge(f"Dense oracle limited to dimension {DENSE_LIMIT}, got {matrix.shape[0]}")

    values, vectors = scipy.linalg.eig(matrix)
    order = np.argsort(values.real, kind='stable')
    values, vectors = values[order], vectors[:, order]

    principal = None
    for i in range(len(values)):
        if abs(values[i].imag) > 1e-9 * max(1.0, abs(values[i])):
            continue
        v = vectors[:, i].real
        v = v / v[np.argmax(np.abs(v))]
        if np.all(v > -1e-9):
            principal = i
            break
    return DenseSpectrum(values=values, vectors=vectors, principal_index=principal)


def rayleigh_minimum(op: BandedOperator) -> float:
    """Minimum of the Rayleigh quotient of D^{1/2} A D^{-1/2} (symmetric tridiagonal)."""
    off = -np.sqrt(op.upper * op.lower)
    values = scipy.linalg.eigh_tridiagonal(op.diagonal, off, eigvals_only=True, select='i', select_range=(0, 0))
    return float(values[0])
