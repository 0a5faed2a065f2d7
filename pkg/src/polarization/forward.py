"""Intensity moments I_Kq of rotated states, by direct expectation and by multipoles."""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional

import numpy as np
from scipy.special import comb

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.rotations import Direction, EulerAngles
from src.angular.special_functions import clebsch_gordan, harmonic_row, wigner_D_matrix
from src.fock.correlations import CorrelationMatrix
from src.fock.states import LayerState, TwoModeState
from src.fock.tensors import TensorIndex
from src.utils.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntensityMomentSet:
    """All I_Kq (q = K ... -K) measured at one direction.

    `order` tags the per-L direction set a record was taken from; exact
    reconstruction groups records by it. `covariance` is the covariance of the
    estimates across q (they share one set of counts).
    """

    K: HalfInt
    direction: Direction
    values: np.ndarray
    std_errors: Optional[np.ndarray] = None
    shots: Optional[int] = None
    psi: Optional[float] = None
    order: Optional[int] = None
    covariance: Optional[np.ndarray] = None

    def __post_init__(self):
        K = HalfInt.of(self.K)
        values = np.array(self.values, dtype=float).ravel()
        if values.size != K.dimension:
            raise InvalidInputError(f"K={K} needs {K.dimension} moment values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Intensity moments must be finite")
        if np.min(values) < -Config.MOMENT_TOL * max(1.0, float(np.max(np.abs(values)))):
            raise InvalidInputError(f"Negative intensity moment {np.min(values)}")
        values.setflags(write=False)
        object.__setattr__(self, 'K', K)
        object.__setattr__(self, 'values', values)
        if self.std_errors is not None:
            errors = np.array(self.std_errors, dtype=float).ravel()
            if errors.shape != values.shape or np.any(errors < 0) or not np.all(np.isfinite(errors)):
                raise InvalidInputError("Standard errors must be finite, non-negative, one per moment")
            errors.setflags(write=False)
            object.__setattr__(self, 'std_errors', errors)
        if self.shots is not None and int(self.shots) < 1:
            raise InvalidInputError(f"Shot count must be >= 1, got {self.shots}")
        if self.covariance is not None:
            covariance = np.array(self.covariance, dtype=float)
            if covariance.shape != (K.dimension, K.dimension) or not np.all(np.isfinite(covariance)):
                raise InvalidInputError(f"Moment covariance must be a finite {K.dimension}x{K.dimension} matrix")
            scale = max(1.0, float(np.max(np.abs(covariance))))
            if np.max(np.abs(covariance - covariance.T)) > Config.MOMENT_TOL * scale:
                raise InvalidInputError("Moment covariance must be symmetric")
            covariance = 0.5 * (covariance + covariance.T)
            covariance.setflags(write=False)
            object.__setattr__(self, 'covariance', covariance)

    @property
    def euler(self) -> EulerAngles:
        return self.direction.euler(self.psi or 0.0)

    def value(self, q: HalfIntLike) -> float:
        q = HalfInt.of(q)
        if not self.K.pairs_with(q):
            raise InvalidInputError(f"q={q} is not a projection of K={self.K}")
        return float(self.values[(self.K.twice_value - q.twice_value) // 2])

    def error(self, q: HalfIntLike) -> float:
        if self.std_errors is None:
            return 0.0
        q = HalfInt.of(q)
        return float(self.std_errors[(self.K.twice_value - q.twice_value) // 2])

    @property
    def is_noiseless(self) -> bool:
        return self.shots is None


MeasurementRecord = IntensityMomentSet


def _rotate_layer(layer: LayerState, g: EulerAngles) -> LayerState:
    D = wigner_D_matrix(layer.spin, g)
    rho = D @ layer.rho @ D.conj().T
    return layer.with_rho(0.5 * (rho + rho.conj().T))


def rotate_state(state: TwoModeState, g: EulerAngles) -> TwoModeState:
    """rho -> R(g) rho R(g)^dagger, layer by layer"""
    layers = tuple(_rotate_layer(layer, g) for layer in state.layers)
    coherences = {}
    for (s1, s2), block in state.coherences.items():
        coherences[(s1, s2)] = wigner_D_matrix(s1, g) @ block @ wigner_D_matrix(s2, g).conj().T
    return TwoModeState(layers, coherences)


def _counter_rotated_populations(state: TwoModeState, g: EulerAngles) -> Dict[HalfInt, np.ndarray]:
    """Diagonal of R(g)^dagger rho_S R(g) for every layer"""
    populations = {}
    for layer in state.layers:
        D = wigner_D_matrix(layer.spin, g)
        # diag(D^dagger rho D)_i = sum_jk conj(D_ji) rho_jk D_ki
        populations[layer.spin] = np.real(np.einsum('ji,jk,ki->i', D.conj(), layer.rho, D))
    return populations


def _binomial_weights(spin: HalfInt, idx: TensorIndex) -> np.ndarray:
    n_v = np.arange(spin.twice_value + 1)
    n_h = spin.twice_value - n_v
    return comb(n_h, idx.h_quanta) * comb(n_v, idx.v_quanta)


def intensity_moment_direct(state: TwoModeState, idx: TensorIndex, g: EulerAngles) -> float:
    """Tr[rho R T_Kq T_Kq^dagger R^dagger] as a binomial moment of the counter-rotated state"""
    populations = _counter_rotated_populations(state, g)
    total = 0.0
    for layer in state.layers:
        total += layer.weight * float(populations[layer.spin] @ _binomial_weights(layer.spin, idx))
    return total


def intensity_moments(state: TwoModeState, K: HalfIntLike, g: EulerAngles,
                      order: Optional[int] = None) -> IntensityMomentSet:
    """Noiseless I_Kq for every q at one rotation"""
    K = HalfInt.of(K)
    populations = _counter_rotated_populations(state, g)
    values = []
    for idx in TensorIndex.family(K):
        values.append(sum(layer.weight * float(populations[layer.spin] @ _binomial_weights(layer.spin, idx))
                          for layer in state.layers))
    return IntensityMomentSet(K, g.direction, np.clip(values, 0.0, None), psi=g.psi, order=order)


def _parity(twice_difference: int) -> float:
    """(-1)^x for an integer x given as 2x"""
    return -1.0 if (twice_difference // 2) % 2 else 1.0


@lru_cache(maxsize=None)
def _multipole_weights_twice(tK: int, L: int, m: int) -> np.ndarray:
    K = HalfInt(tK)
    labels = K.projections()
    weights = np.zeros((K.dimension, K.dimension))
    for a, q1 in enumerate(labels):
        for b, q2 in enumerate(labels):
            if q1.twice_value - q2.twice_value == 2 * m:
                weights[a, b] = _parity(tK - q2.twice_value) * clebsch_gordan(K, q1, K, -q2, L, m)
    weights.setflags(write=False)
    return weights


def multipole_weights(K: HalfIntLike, L: int, m: int) -> np.ndarray:
    """W[q'', q'] = (-1)^(K-q') C^{Lm}_{Kq'',K-q'}, so that G~_L^(m) = sum(W * G)"""
    return _multipole_weights_twice(HalfInt.of(K).twice_value, int(L), int(m))


def intensity_moment_multipole(G: CorrelationMatrix, q: HalfIntLike, direction: Direction) -> float:
    """I_Kq from the finite multipole sum over L = 0 ... 2K"""
    K = G.K
    q = HalfInt.of(q)
    if not K.pairs_with(q):
        raise InvalidInputError(f"q={q} is not a projection of K={K}")
    total = 0j
    for L in range(K.twice_value + 1):
        coupling = clebsch_gordan(K, q, K, -q, L, 0)
        if coupling == 0.0:
            continue
        multipoles = np.array([np.sum(multipole_weights(K, L, m) * G.entries) for m in range(-L, L + 1)])
        harmonic_sum = np.vdot(harmonic_row(L, direction), multipoles)
        total += math.sqrt(4.0 * math.pi / (2 * L + 1)) * coupling * harmonic_sum
    return float(_parity(K.twice_value - q.twice_value) * total.real)
