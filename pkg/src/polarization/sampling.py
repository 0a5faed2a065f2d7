"""Shot-limited photon-number-resolving detection behind the gadget."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.rotations import Direction, EulerAngles
from src.fock.states import TwoModeState, photon_number_distribution
from src.fock.tensors import TensorIndex
from src.polarization.forward import IntensityMomentSet, rotate_state
from src.utils.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


def sample_counts(state: TwoModeState, g: EulerAngles, shots: int, seed: int) -> np.ndarray:
    """`shots` i.i.d. (n_H, n_V) outcomes of R(g) rho R(g)^dagger, shape (shots, 2)"""
    if int(shots) < 1:
        raise InvalidInputError(f"Shot count must be >= 1, got {shots}")
    table = photon_number_distribution(rotate_state(state, g))
    outcomes = np.array(list(table.keys()), dtype=int)
    probabilities = np.clip(np.array(list(table.values())), 0.0, None)
    probabilities = probabilities / probabilities.sum()
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(outcomes), size=int(shots), p=probabilities)
    return outcomes[picks]


def estimate_intensity(counts, idx: TensorIndex):
    """Sample mean and standard error of C(n_H, K+q) C(n_V, K-q)"""
    counts = np.asarray(counts, dtype=int).reshape(-1, 2)
    if counts.shape[0] == 0:
        raise InvalidInputError("Cannot estimate an intensity moment from zero counts")
    samples = comb(counts[:, 0], idx.h_quanta) * comb(counts[:, 1], idx.v_quanta)
    estimate = float(np.mean(samples))
    if samples.size < 2:
        return estimate, 0.0
    std_error = float(np.std(samples, ddof=1) / np.sqrt(samples.size))
    return estimate, std_error


def estimate_moments(counts, K: HalfIntLike) -> Tuple[np.ndarray, np.ndarray]:
    """Means over q = K ... -K and the covariance of those means"""
    K = HalfInt.of(K)
    counts = np.asarray(counts, dtype=int).reshape(-1, 2)
    if counts.shape[0] == 0:
        raise InvalidInputError("Cannot estimate intensity moments from zero counts")
    samples = np.stack([comb(counts[:, 0], idx.h_quanta) * comb(counts[:, 1], idx.v_quanta)
                        for idx in TensorIndex.family(K)], axis=1)
    means = samples.mean(axis=0)
    if samples.shape[0] < 2:
        return means, np.zeros((K.dimension, K.dimension))
    return means, np.atleast_2d(np.cov(samples, rowvar=False, ddof=1)) / samples.shape[0]


def measure_direction(state: TwoModeState, K: HalfIntLike, direction: Direction, shots: int,
                      seed: int, psi: float = 0.0, order: Optional[int] = None) -> IntensityMomentSet:
    """Estimate every I_Kq at one direction from a single run of detector counts.

    The gadget is set to the inverse rotation so the detectors sample the
    counter-rotated state that defines I_Kq(theta, phi).
    """
    K = HalfInt.of(K)
    g = direction.euler(psi)
    counts = sample_counts(state, g.inverse(), shots, seed)
    means, covariance = estimate_moments(counts, K)
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return IntensityMomentSet(K, direction, means, errors, shots=int(shots), psi=psi, order=order,
                              covariance=covariance)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Independent per-task seeds derived from one master seed"""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def measure_directions(state: TwoModeState, K: HalfIntLike, directions: Sequence[Direction], shots: int,
                       seed: int, order: Optional[int] = None) -> List[IntensityMomentSet]:
    seeds = spawn_seeds(seed, len(directions))
    return [measure_direction(state, K, d, shots, s, order=order) for d, s in zip(directions, seeds)]
