"""Clebsch-Gordan (Schur) transforms between q-indexed and multipole-indexed data.

Phase convention, pinned by requiring the multipole sum to reproduce the
direct intensity moments:

    I~_L        = sum_q (-1)^(K-q) C^{L0}_{Kq,K-q} I_Kq
    G~_L^(m)    = sum_{q'',q'} (-1)^(K-q') C^{Lm}_{Kq'',K-q'} G_{q''q'}
    I~_L(n)     = sqrt(4 pi / (2L+1)) sum_m conj(Y_Lm(n)) G~_L^(m)
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.special_functions import clebsch_gordan
from src.fock.correlations import CorrelationMatrix
from src.polarization.forward import IntensityMomentSet, multipole_weights
from src.utils.exceptions import InsufficientDataError, InvalidInputError

CANONICAL = "canonical"
AXIS = "axis"

# first-order axis convention = AXIS_SCALE * conj(canonical)
AXIS_SCALE = math.sqrt(2.0 / 3.0)


def _sign(twice_difference: int) -> float:
    return -1.0 if (twice_difference // 2) % 2 else 1.0


@dataclass(frozen=True)
class MultipoleVector:
    """G~_L^(m) for m = -L ... L."""

    L: int
    components: np.ndarray
    convention: str = CANONICAL

    def __post_init__(self):
        L = int(self.L)
        components = np.array(self.components, dtype=complex).ravel()
        if L < 0 or components.size != 2 * L + 1:
            raise InvalidInputError(f"Order L={L} needs {2 * L + 1} components, got {components.size}")
        if not np.all(np.isfinite(components)):
            raise InvalidInputError(f"Multipole components of order {L} are not finite")
        if self.convention not in (CANONICAL, AXIS):
            raise InvalidInputError(f"Unknown multipole convention {self.convention!r}")
        components.setflags(write=False)
        object.__setattr__(self, 'L', L)
        object.__setattr__(self, 'components', components)

    @classmethod
    def zeros(cls, L: int) -> 'MultipoleVector':
        return cls(L, np.zeros(2 * L + 1, dtype=complex))

    def component(self, m: int) -> complex:
        if abs(m) > self.L:
            raise InvalidInputError(f"|m|={abs(m)} exceeds L={self.L}")
        return complex(self.components[m + self.L])

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def canonical(self) -> 'MultipoleVector':
        if self.convention == CANONICAL:
            return self
        if self.L != 1:
            raise InvalidInputError("The axis convention exists only for L = 1")
        return MultipoleVector(1, np.conj(self.components) / AXIS_SCALE, CANONICAL)

    def to_axis_convention(self) -> 'MultipoleVector':
        if self.convention == AXIS:
            return self
        if self.L != 1:
            raise InvalidInputError("The axis convention exists only for L = 1")
        return MultipoleVector(1, AXIS_SCALE * np.conj(self.components), AXIS)


def _check_order(K: HalfInt, L: int) -> None:
    if not 0 <= L <= K.twice_value:
        raise InvalidInputError(f"Order L={L} outside 0 ... 2K = {K.twice_value}")


def schur_coefficients_I(K: HalfIntLike, L: int) -> np.ndarray:
    """Row (-1)^(K-q) C^{L0}_{Kq,K-q} over q = K ... -K"""
    K = HalfInt.of(K)
    _check_order(K, L)
    return np.array([_sign(K.twice_value - q.twice_value) * clebsch_gordan(K, q, K, -q, L, 0)
                     for q in K.projections()])


def schur_transform_I(values: IntensityMomentSet, L: int) -> float:
    return float(schur_coefficients_I(values.K, L) @ values.values)


def inverse_schur_I(K: HalfIntLike, transformed: Union[Sequence[float], Mapping[int, float]]) -> np.ndarray:
    """I_Kq from I~_L, L = 0 ... 2K (missing orders count as zero)"""
    K = HalfInt.of(K)
    if not isinstance(transformed, Mapping):
        transformed = dict(enumerate(transformed))
    result = np.zeros(K.dimension)
    for L, value in transformed.items():
        result += schur_coefficients_I(K, int(L)) * float(value)
    return result


def schur_transform_G(G: CorrelationMatrix, L: int, m: int) -> complex:
    K = G.K
    _check_order(K, L)
    if abs(m) > L:
        raise InvalidInputError(f"|m|={abs(m)} exceeds L={L}")
    return complex(np.sum(multipole_weights(K, L, m) * G.entries))


def schur_multipoles(G: CorrelationMatrix) -> List[MultipoleVector]:
    """Every multipole vector L = 0 ... 2K of G^K"""
    return [MultipoleVector(L, [schur_transform_G(G, L, m) for m in range(-L, L + 1)])
            for L in range(G.K.twice_value + 1)]


def inverse_schur_G(multipoles: Iterable[MultipoleVector], K: Optional[HalfIntLike] = None) -> CorrelationMatrix:
    """G^K from its complete multipole set; K defaults to half the highest order"""
    by_order = {}
    for vector in multipoles:
        by_order[vector.L] = vector.canonical()
    if K is None:
        if not by_order:
            raise InsufficientDataError("No multipoles supplied", [0])
        K = HalfInt(max(by_order))
    K = HalfInt.of(K)
    missing = [L for L in range(K.twice_value + 1) if L not in by_order]
    if missing:
        raise InsufficientDataError(f"Incomplete multipole set for K={K}", missing)

    # the weights are orthogonal, so the forward weights also invert
    entries = np.zeros((K.dimension, K.dimension), dtype=complex)
    for L in range(K.twice_value + 1):
        for m in range(-L, L + 1):
            entries += multipole_weights(K, L, m) * by_order[L].component(m)
    return CorrelationMatrix(K, entries)
