"""Glauber-ordered correlation matrices G^K_{qq'} = Tr(rho T_Kq T_Kq'^dagger)."""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike
from src.fock.states import TwoModeState
from src.fock.tensors import TensorIndex, tensor_matrix
from src.utils.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelationMatrix:
    """G^K with rows and columns ordered q = K ... -K."""

    K: HalfInt
    entries: np.ndarray

    def __post_init__(self):
        K = HalfInt.of(self.K)
        entries = np.array(self.entries, dtype=complex)
        if K.twice_value < 0 or entries.shape != (K.dimension, K.dimension):
            raise InvalidInputError(f"G^{K} must be {K.dimension}x{K.dimension}, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, 'K', K)
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def zeros(cls, K: HalfIntLike) -> 'CorrelationMatrix':
        K = HalfInt.of(K)
        return cls(K, np.zeros((K.dimension, K.dimension), dtype=complex))

    @property
    def labels(self) -> List[HalfInt]:
        return self.K.projections()

    def entry(self, q: HalfIntLike, q2: HalfIntLike) -> complex:
        q, q2 = HalfInt.of(q), HalfInt.of(q2)
        return complex(self.entries[self._index(q), self._index(q2)])

    def _index(self, q: HalfInt) -> int:
        if not self.K.pairs_with(q):
            raise InvalidInputError(f"q={q} is not a projection of K={self.K}")
        return (self.K.twice_value - q.twice_value) // 2

    def is_hermitian(self, tol: float = Config.HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def min_eigenvalue(self) -> float:
        hermitian = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.min(np.linalg.eigvalsh(hermitian)))

    def hermitized(self) -> 'CorrelationMatrix':
        return CorrelationMatrix(self.K, 0.5 * (self.entries + self.entries.conj().T))

    def max_abs_difference(self, other: 'CorrelationMatrix') -> float:
        if other.K != self.K:
            raise InvalidInputError(f"Cannot compare G^{self.K} with G^{other.K}")
        return float(np.max(np.abs(self.entries - other.entries)))


def _lowering_stack(K: HalfInt, spin: HalfInt) -> np.ndarray:
    """A[q] = matrix of T_Kq from layer S-K to layer S, stacked over q"""
    source = spin - K
    return np.stack([tensor_matrix(idx, source) for idx in TensorIndex.family(K)])


def correlation_matrix(state: TwoModeState, K: HalfIntLike) -> CorrelationMatrix:
    """G^K summed over Fock layers; layers with S < K contribute nothing"""
    K = HalfInt.of(K)
    if K.twice_value < 0:
        raise InvalidInputError(f"K must be >= 0, got {K}")
    G = np.zeros((K.dimension, K.dimension), dtype=complex)
    for layer in state.layers:
        if layer.spin < K:
            continue
        A = _lowering_stack(K, layer.spin)
        # Tr(rho A_q A_p^dagger)
        G += layer.weight * np.einsum('ij,qjk,pik->qp', layer.rho, A, A.conj())
    return CorrelationMatrix(K, G)


def interlayer_correlation(state: TwoModeState, K: HalfIntLike, K2: HalfIntLike,
                           q: HalfIntLike, q2: HalfIntLike) -> complex:
    """Tr(rho T_Kq T_K2q2^dagger); zero unless the needed coherence blocks exist"""
    first = TensorIndex.of(K, q)
    second = TensorIndex.of(K2, q2)
    present = set(state.spins)
    total = 0j
    for spin in state.spins:
        if spin < second.K:
            continue
        target = spin + first.K - second.K
        if target not in present:
            continue
        middle = spin - second.K
        # <middle| T_K2q2^dagger |spin> then T_Kq up to target
        operator = tensor_matrix(first, middle) @ tensor_matrix(second, middle).T
        total += np.trace(state.block(spin, target) @ operator)
    return complex(total)
