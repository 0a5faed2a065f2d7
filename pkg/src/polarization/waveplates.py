"""Jones matrices of wave plates and the quarter-half-quarter SU(2) gadget.

Mode amplitudes are ordered (a_H, a_V), matching the spin-1/2 basis
(m = +1/2, m = -1/2); a ModeUnitary is therefore the matrix D^{1/2}(g).
"""

import cmath
import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from scipy.optimize import least_squares

from config import Config
from src.angular.rotations import EulerAngles
from src.angular.special_functions import wigner_D_matrix
from src.utils.exceptions import ConvergenceError, InvalidInputError

logger = logging.getLogger(__name__)

_DEGENERATE_TOL = 1e-14


class PlateKind(Enum):
    QUARTER = "quarter"
    HALF = "half"


@dataclass(frozen=True)
class PlateSetting:
    """A retarder with its fast axis at `angle` from H; angle kept in [0, pi)."""

    kind: PlateKind
    angle: float = 0.0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, PlateKind) else PlateKind(str(self.kind).lower())
        angle = float(self.angle)
        if not math.isfinite(angle):
            raise InvalidInputError(f"Plate angle must be finite, got {angle}")
        angle = math.fmod(angle, math.pi)
        if angle < 0.0:
            angle += math.pi
        if angle >= math.pi:
            angle = 0.0
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'angle', angle)

    @classmethod
    def quarter(cls, angle: float) -> 'PlateSetting':
        return cls(PlateKind.QUARTER, angle)

    @classmethod
    def half(cls, angle: float) -> 'PlateSetting':
        return cls(PlateKind.HALF, angle)


@dataclass(frozen=True)
class ModeUnitary:
    """2x2 unitary on (a_H, a_V), rescaled to determinant +1."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.shape != (2, 2):
            raise InvalidInputError(f"Mode unitaries are 2x2, got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > Config.HERMITIAN_TOL * 100:
            raise InvalidInputError("Matrix is not unitary")
        u = u / cmath.sqrt(np.linalg.det(u))
        u.setflags(write=False)
        object.__setattr__(self, 'matrix', u)

    def __matmul__(self, other: 'ModeUnitary') -> 'ModeUnitary':
        return ModeUnitary(self.matrix @ other.matrix)

    def dagger(self) -> 'ModeUnitary':
        return ModeUnitary(self.matrix.conj().T)

    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def distance(self, other: 'ModeUnitary') -> float:
        """Frobenius distance minimized over the SU(2) sign"""
        return float(min(np.linalg.norm(self.matrix - other.matrix),
                         np.linalg.norm(self.matrix + other.matrix)))


def _rotator(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


_RETARDERS = {
    PlateKind.QUARTER: np.diag([1.0, 1j]),
    PlateKind.HALF: np.diag([1.0, -1.0]),
}


def plate_unitary(plate: PlateSetting) -> ModeUnitary:
    """R(angle) diag(1, e^{i delta}) R(-angle), delta = pi/2 or pi"""
    rotator = _rotator(plate.angle)
    return ModeUnitary(rotator @ _RETARDERS[plate.kind] @ rotator.T)


def gadget_unitary(q1: PlateSetting, h: PlateSetting, q2: PlateSetting) -> ModeUnitary:
    """Light crosses q1, then h, then q2"""
    kinds = (q1.kind, h.kind, q2.kind)
    if kinds != (PlateKind.QUARTER, PlateKind.HALF, PlateKind.QUARTER):
        raise InvalidInputError(f"Gadget needs (quarter, half, quarter) plates, got {[k.value for k in kinds]}")
    return plate_unitary(q2) @ plate_unitary(h) @ plate_unitary(q1)


def _gadget_matrix(angles: np.ndarray) -> np.ndarray:
    return gadget_unitary(PlateSetting.quarter(angles[0]), PlateSetting.half(angles[1]),
                          PlateSetting.quarter(angles[2])).matrix


def gadget_decompose(target: ModeUnitary, seed: int = 0) -> Tuple[PlateSetting, PlateSetting, PlateSetting]:
    """Plate angles (q1, h, q2) whose gadget equals target up to global phase.

    Multi-start Levenberg-Marquardt on the 8 real residuals of U(angles) - s*target
    for both SU(2) signs s.
    """
    rng = np.random.default_rng(seed)
    goal = target.matrix
    best_angles, best_residual = None, math.inf

    for attempt in range(Config.DECOMPOSE_MAX_RESTARTS):
        start = rng.uniform(0.0, math.pi, size=3)
        for sign in (1.0, -1.0):
            def residuals(x, sign=sign):
                diff = _gadget_matrix(x) - sign * goal
                return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

            fit = least_squares(residuals, start, method='lm', xtol=1e-15, ftol=1e-15, gtol=1e-15)
            residual = ModeUnitary(_gadget_matrix(fit.x)).distance(target)
            if residual < best_residual:
                best_angles, best_residual = fit.x, residual
        if best_residual < Config.DECOMPOSE_TOL:
            break

    if best_residual >= Config.DECOMPOSE_ACCEPT:
        logger.error(f"Gadget decomposition failed after {attempt + 1} restarts")
        raise ConvergenceError("Wave-plate gadget decomposition did not converge", best_residual)
    logger.debug(f"Gadget decomposed after {attempt + 1} restarts, residual {best_residual:.2e}")
    return (PlateSetting.quarter(best_angles[0]), PlateSetting.half(best_angles[1]),
            PlateSetting.quarter(best_angles[2]))


def euler_to_su2(angles: EulerAngles) -> ModeUnitary:
    return ModeUnitary(wigner_D_matrix('1/2', angles))


def su2_to_euler(u: ModeUnitary) -> EulerAngles:
    """Euler angles with D^{1/2}(angles) = +-u; psi = 0 at theta in {0, pi}"""
    a = complex(u.matrix[0, 0])
    b = complex(u.matrix[1, 0])
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(b) < _DEGENERATE_TOL:
        return EulerAngles(-2.0 * cmath.phase(a), 0.0, 0.0)
    if abs(a) < _DEGENERATE_TOL:
        return EulerAngles(2.0 * cmath.phase(b), math.pi, 0.0)
    arg_a, arg_b = cmath.phase(a), cmath.phase(b)
    return EulerAngles(arg_b - arg_a, theta, -arg_a - arg_b)
