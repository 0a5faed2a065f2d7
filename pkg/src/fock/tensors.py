"""SU(2) tensor operators T_Kq = a_H^{+(K+q)} a_V^{+(K-q)} / sqrt((K+q)! (K-q)!).

T_Kq raises the photon number by 2K and so maps layer S onto layer S+K.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np
from scipy.special import comb

from src.angular.half_int import HalfInt, HalfIntLike
from src.utils.exceptions import InvalidInputError


@dataclass(frozen=True)
class TensorIndex:
    K: HalfInt
    q: HalfInt

    def __post_init__(self):
        K, q = HalfInt.of(self.K), HalfInt.of(self.q)
        if K.twice_value < 0 or not K.pairs_with(q):
            raise InvalidInputError(f"Invalid tensor index (K={K}, q={q})")
        object.__setattr__(self, 'K', K)
        object.__setattr__(self, 'q', q)

    @classmethod
    def of(cls, K: HalfIntLike, q: HalfIntLike) -> 'TensorIndex':
        return cls(HalfInt.of(K), HalfInt.of(q))

    @classmethod
    def family(cls, K: HalfIntLike) -> List['TensorIndex']:
        """All indices of order K, q = K ... -K"""
        K = HalfInt.of(K)
        return [cls(K, q) for q in K.projections()]

    @property
    def h_quanta(self) -> int:
        """K + q, photons added to mode H"""
        return (self.K.twice_value + self.q.twice_value) // 2

    @property
    def v_quanta(self) -> int:
        """K - q, photons added to mode V"""
        return (self.K.twice_value - self.q.twice_value) // 2

    def __str__(self) -> str:
        return f"T[{self.K},{self.q}]"


@lru_cache(maxsize=1024)
def _tensor_matrix_twice(tK: int, tq: int, tS: int) -> np.ndarray:
    a = (tK + tq) // 2
    b = (tK - tq) // 2
    n_v = np.arange(tS + 1)
    n_h = tS - n_v
    matrix = np.zeros((tS + tK + 1, tS + 1))
    matrix[n_v + b, n_v] = np.sqrt(comb(n_h + a, a) * comb(n_v + b, b))
    matrix.setflags(write=False)
    return matrix


def tensor_matrix(idx: TensorIndex, spin: HalfIntLike) -> np.ndarray:
    """Matrix of T_Kq from layer S (columns) to layer S+K (rows)"""
    spin = HalfInt.of(spin)
    if spin.twice_value < 0:
        raise InvalidInputError(f"Layer spin must be >= 0, got {spin}")
    return _tensor_matrix_twice(idx.K.twice_value, idx.q.twice_value, spin.twice_value)


def apply_tensor(idx: TensorIndex, vec) -> np.ndarray:
    """T_Kq applied to an amplitude vector of layer S = (len(vec) - 1) / 2"""
    vec = np.asarray(vec, dtype=complex).ravel()
    if vec.size == 0:
        raise InvalidInputError("Cannot apply a tensor to an empty vector")
    return tensor_matrix(idx, HalfInt(vec.size - 1)) @ vec


def tensor_norm_sum(spin: HalfIntLike, K: HalfIntLike, q: HalfIntLike) -> float:
    """sum_m ||T_Kq |S,m>||^2, the layer-S trace of T^dagger T"""
    matrix = tensor_matrix(TensorIndex.of(K, q), spin)
    return float(np.sum(matrix ** 2))
