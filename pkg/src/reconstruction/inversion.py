"""Inversions from intensity moments to multipoles and correlation matrices."""

import math
import logging
from typing import Callable, Optional, Sequence

import numpy as np

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.rotations import Direction
from src.angular.special_functions import clebsch_gordan, spherical_harmonic
from src.fock.correlations import CorrelationMatrix
from src.polarization.forward import IntensityMomentSet
from src.reconstruction.directions import DirectionSet
from src.reconstruction.quadrature import QuadratureGrid, default_grid
from src.reconstruction.schur import AXIS, MultipoleVector, inverse_schur_G
from src.utils.exceptions import ConditioningError, InvalidInputError, VanishingCoefficientError

logger = logging.getLogger(__name__)

Sampler = Callable[[Direction], IntensityMomentSet]

_FIRST_ORDER_MATRIX = np.array([
    [-1.0, 1j, 0.0],
    [0.0, 0.0, math.sqrt(2.0)],
    [1.0, 1j, 0.0],
]) / math.sqrt(3.0)


def continuous_inversion(sampler: Sampler, K: HalfIntLike, q: Optional[HalfIntLike] = None,
                         grid: Optional[QuadratureGrid] = None) -> CorrelationMatrix:
    """G^K from I_Kq integrated against Y_Lm over the sphere; q defaults to K"""
    K = HalfInt.of(K)
    q = K if q is None else HalfInt.of(q)
    if not K.pairs_with(q):
        raise InvalidInputError(f"q={q} is not a projection of K={K}")
    grid = grid or default_grid(K)

    couplings = {}
    for L in range(K.twice_value + 1):
        coupling = clebsch_gordan(K, q, K, -q, L, 0)
        if abs(coupling) < Config.CG_ZERO_TOL:
            raise VanishingCoefficientError(L, str(q))
        couplings[L] = coupling

    samples = np.array([sampler(direction).value(q) for direction in grid.directions])
    weighted = samples * grid.weights
    sign = -1.0 if ((K.twice_value - q.twice_value) // 2) % 2 else 1.0

    multipoles = []
    for L, coupling in couplings.items():
        scale = sign * math.sqrt((2 * L + 1) / (4.0 * math.pi)) / coupling
        components = []
        for m in range(-L, L + 1):
            harmonics = np.array([spherical_harmonic(L, m, d) for d in grid.directions])
            components.append(scale * complex(weighted @ harmonics))
        multipoles.append(MultipoleVector(L, components))
    return inverse_schur_G(multipoles, K).hermitized()


def first_order_inversion(I_x: float, I_y: float, I_z: float) -> MultipoleVector:
    """Closed-form L = 1 multipoles from I~_1 at +x, +y, +z (axis convention)"""
    g_plus, g_zero, g_minus = _FIRST_ORDER_MATRIX @ np.array([I_x, I_y, I_z], dtype=complex)
    return MultipoleVector(1, [g_minus, g_zero, g_plus], AXIS)


def discrete_inversion(values: Sequence[float], dirs: DirectionSet) -> MultipoleVector:
    """G~_L = sqrt(4 pi / (2L+1)) Y_L^T P_L^{-1} I~_L"""
    L = dirs.L
    values = np.asarray(values, dtype=float).ravel()
    if values.size != 2 * L + 1:
        raise InvalidInputError(f"Order L={L} needs {2 * L + 1} values, got {values.size}")
    if dirs.cond_P > Config.COND_MAX:
        logger.error(f"P_{L} is singular or ill-conditioned (cond {dirs.cond_P:.3e})")
        raise ConditioningError("Legendre Gram matrix is ill-conditioned", dirs.cond_P, L)
    if dirs.cond_P > Config.COND_WARN:
        logger.warning(f"P_{L} condition number {dirs.cond_P:.3e} exceeds {Config.COND_WARN:.0e}")
    solved = np.linalg.solve(dirs.gram(), values)
    components = math.sqrt(4.0 * math.pi / (2 * L + 1)) * (dirs.harmonics().T @ solved)
    return MultipoleVector(L, components)
