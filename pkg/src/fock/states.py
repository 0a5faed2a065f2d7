"""Two-mode states parsed into Fock layers.

Layer S holds the photon-number-2S states |S, m> = |n_H = S+m> (x) |n_V = S-m>,
stored densely with index i <-> m = S - i (index 0 is n_H = 2S, n_V = 0).
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike
from src.utils.exceptions import InvalidInputError, InvalidStateError

logger = logging.getLogger(__name__)

CoherenceKey = Tuple[HalfInt, HalfInt]


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True)
class LayerState:
    """Density operator on one Fock layer plus its probability p_S."""

    spin: HalfInt
    weight: float
    rho: np.ndarray

    def __post_init__(self):
        spin = HalfInt.of(self.spin)
        rho = _frozen(self.rho)
        dim = spin.dimension
        if spin.twice_value < 0:
            raise InvalidStateError(f"Layer spin must be >= 0, got {spin}")
        if rho.shape != (dim, dim):
            raise InvalidStateError(f"Layer S={spin} needs a {dim}x{dim} matrix, got {rho.shape}")
        weight = float(self.weight)
        if not (-Config.TRACE_TOL <= weight <= 1.0 + Config.TRACE_TOL):
            raise InvalidStateError(f"Layer weight {weight} outside [0, 1]")
        if np.max(np.abs(rho - rho.conj().T)) > Config.HERMITIAN_TOL:
            raise InvalidStateError(f"Layer S={spin} density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > Config.TRACE_TOL:
            raise InvalidStateError(f"Layer S={spin} density matrix has trace {np.trace(rho).real}")
        if np.min(np.linalg.eigvalsh(rho)) < -Config.PSD_TOL:
            raise InvalidStateError(f"Layer S={spin} density matrix is not positive semidefinite")
        object.__setattr__(self, 'spin', spin)
        object.__setattr__(self, 'weight', min(max(weight, 0.0), 1.0))
        object.__setattr__(self, 'rho', rho)

    @property
    def dimension(self) -> int:
        return self.spin.dimension

    def occupations(self) -> List[Tuple[int, int]]:
        """(n_H, n_V) for each basis index"""
        two_s = self.spin.twice_value
        return [(two_s - i, i) for i in range(two_s + 1)]

    def with_weight(self, weight: float) -> 'LayerState':
        return LayerState(self.spin, weight, self.rho)

    def with_rho(self, rho: np.ndarray) -> 'LayerState':
        return LayerState(self.spin, self.weight, rho)

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


@dataclass(frozen=True)
class TwoModeState:
    """Block-diagonal collection of Fock layers.

    `coherences[(S, S2)]` with S < S2 holds the global block <S|rho|S2>
    (weights included). Coherences feed forward computations only.
    """

    layers: Tuple[LayerState, ...]
    coherences: Mapping[CoherenceKey, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(sorted(self.layers, key=lambda layer: layer.spin))
        if not layers:
            raise InvalidStateError("A state needs at least one Fock layer")
        spins = [layer.spin for layer in layers]
        if len(set(spins)) != len(spins):
            raise InvalidStateError(f"Duplicate Fock layers: {[str(s) for s in spins]}")
        total = sum(layer.weight for layer in layers)
        if abs(total - 1.0) > Config.TRACE_TOL:
            raise InvalidStateError(f"Layer weights sum to {total}, expected 1")

        coherences: Dict[CoherenceKey, np.ndarray] = {}
        by_spin = {layer.spin: layer for layer in layers}
        for (s1, s2), block in dict(self.coherences).items():
            s1, s2 = HalfInt.of(s1), HalfInt.of(s2)
            block = _frozen(block)
            if s1 > s2:
                s1, s2, block = s2, s1, _frozen(block.conj().T)
            if s1 == s2 or s1 not in by_spin or s2 not in by_spin:
                raise InvalidStateError(f"Coherence block ({s1}, {s2}) needs two distinct present layers")
            if block.shape != (s1.dimension, s2.dimension):
                raise InvalidStateError(f"Coherence block ({s1}, {s2}) has shape {block.shape}")
            coherences[(s1, s2)] = block
        object.__setattr__(self, 'layers', layers)
        object.__setattr__(self, 'coherences', coherences)

        if coherences:
            eigenvalues = np.linalg.eigvalsh(self.global_matrix())
            if np.min(eigenvalues) < -Config.PSD_TOL:
                raise InvalidStateError("Coherence blocks make the global density matrix non-positive")

    @property
    def spins(self) -> List[HalfInt]:
        return [layer.spin for layer in self.layers]

    @property
    def max_spin(self) -> HalfInt:
        return self.layers[-1].spin

    def layer(self, spin: HalfIntLike) -> Optional[LayerState]:
        spin = HalfInt.of(spin)
        for layer in self.layers:
            if layer.spin == spin:
                return layer
        return None

    def block(self, spin: HalfIntLike, spin2: HalfIntLike) -> np.ndarray:
        """Global block <S|rho|S2>, zero when no coherence is stored"""
        spin, spin2 = HalfInt.of(spin), HalfInt.of(spin2)
        if spin == spin2:
            layer = self.layer(spin)
            if layer is None:
                return np.zeros((spin.dimension, spin.dimension), dtype=complex)
            return layer.weight * layer.rho
        if (spin, spin2) in self.coherences:
            return self.coherences[(spin, spin2)]
        if (spin2, spin) in self.coherences:
            return self.coherences[(spin2, spin)].conj().T
        return np.zeros((spin.dimension, spin2.dimension), dtype=complex)

    def global_matrix(self) -> np.ndarray:
        """Full density matrix over the stored layers, ordered by spin"""
        offsets, total = [], 0
        for layer in self.layers:
            offsets.append(total)
            total += layer.dimension
        rho = np.zeros((total, total), dtype=complex)
        for a, la in enumerate(self.layers):
            for b, lb in enumerate(self.layers):
                rho[offsets[a]:offsets[a] + la.dimension,
                    offsets[b]:offsets[b] + lb.dimension] = self.block(la.spin, lb.spin)
        return rho

    def map_layers(self, transform) -> 'TwoModeState':
        """Apply `transform(layer) -> LayerState` to every layer (coherences dropped)"""
        return TwoModeState(tuple(transform(layer) for layer in self.layers))


def pure_layer_state(spin: HalfIntLike, amplitudes: Sequence[complex]) -> LayerState:
    """Normalized projector onto sum_i psi_i |S, m = S - i>"""
    spin = HalfInt.of(spin)
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.size != spin.dimension:
        raise InvalidInputError(f"Layer S={spin} needs {spin.dimension} amplitudes, got {psi.size}")
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise InvalidInputError("Amplitude vector is zero")
    psi = psi / norm
    return LayerState(spin, 1.0, np.outer(psi, psi.conj()))


def random_layer_state(spin: HalfIntLike, rank: int, seed: int) -> LayerState:
    """Haar-random eigenbasis with Dirichlet-distributed spectrum of given rank"""
    spin = HalfInt.of(spin)
    dim = spin.dimension
    if not 1 <= rank <= dim:
        raise InvalidInputError(f"Rank must lie in [1, {dim}] for S={spin}, got {rank}")
    rng = np.random.default_rng(seed)
    ginibre = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(ginibre)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))[None, :]
    spectrum = rng.dirichlet(np.ones(rank))
    basis = q[:, :rank]
    rho = (basis * spectrum[None, :]) @ basis.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return LayerState(spin, 1.0, rho)


def state_from_layers(layers: Iterable[LayerState],
                      weights: Optional[Sequence[float]] = None) -> TwoModeState:
    layers = list(layers)
    if weights is not None:
        if len(weights) != len(layers):
            raise InvalidInputError("One weight per layer is required")
        layers = [layer.with_weight(w) for layer, w in zip(layers, weights)]
    return TwoModeState(tuple(layers))


def single_layer(layer: LayerState) -> TwoModeState:
    return TwoModeState((layer.with_weight(1.0),))


def vacuum_state() -> TwoModeState:
    return single_layer(pure_layer_state(HalfInt(0), [1.0]))


def fock_state(n_h: int, n_v: int) -> TwoModeState:
    """|n_H> (x) |n_V>"""
    if n_h < 0 or n_v < 0:
        raise InvalidInputError(f"Occupations must be >= 0, got ({n_h}, {n_v})")
    spin = HalfInt(n_h + n_v)
    amplitudes = np.zeros(spin.dimension, dtype=complex)
    amplitudes[n_v] = 1.0
    return single_layer(pure_layer_state(spin, amplitudes))


def noon_state(n: int) -> TwoModeState:
    """(|n, 0> + |0, n>) / sqrt(2)"""
    if n < 1:
        raise InvalidInputError(f"NOON states need n >= 1, got {n}")
    spin = HalfInt(n)
    amplitudes = np.zeros(spin.dimension, dtype=complex)
    amplitudes[0] = amplitudes[-1] = 1.0
    return single_layer(pure_layer_state(spin, amplitudes))


def superposition_state(components: Mapping[HalfIntLike, Sequence[complex]]) -> TwoModeState:
    """Pure state spanning several layers, inter-layer coherences included"""
    vectors = {HalfInt.of(s): np.asarray(a, dtype=complex).ravel() for s, a in components.items()}
    for spin, vec in vectors.items():
        if vec.size != spin.dimension:
            raise InvalidInputError(f"Layer S={spin} needs {spin.dimension} amplitudes, got {vec.size}")
    norm = math.sqrt(sum(float(np.vdot(v, v).real) for v in vectors.values()))
    if norm == 0.0:
        raise InvalidInputError("Amplitude vector is zero")
    vectors = {s: v / norm for s, v in vectors.items() if np.any(v != 0)}

    layers, coherences = [], {}
    for spin, vec in vectors.items():
        weight = float(np.vdot(vec, vec).real)
        layers.append(LayerState(spin, weight, np.outer(vec, vec.conj()) / weight))
    spins = sorted(vectors)
    for a, s1 in enumerate(spins):
        for s2 in spins[a + 1:]:
            coherences[(s1, s2)] = np.outer(vectors[s1], vectors[s2].conj())
    return TwoModeState(tuple(layers), coherences)


def photon_number_distribution(state: TwoModeState) -> Dict[Tuple[int, int], float]:
    """p(n_H, n_V) = p_S <S,m|rho_S|S,m>"""
    table: Dict[Tuple[int, int], float] = {}
    for layer in state.layers:
        diagonal = np.real(np.diag(layer.rho))
        for (n_h, n_v), p in zip(layer.occupations(), diagonal):
            table[(n_h, n_v)] = layer.weight * max(float(p), 0.0)
    return table
