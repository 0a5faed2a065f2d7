"""Measurement-direction sets for the per-order discrete inversion.

Directions act as lines (n and -n give the same Legendre Gram entries up to
sign), so spreading is measured by the line angle arccos|n_i . n_j|.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from config import Config
from src.angular.rotations import AXIS_X, AXIS_Y, AXIS_Z, Direction
from src.angular.special_functions import harmonic_row, legendre_P
from src.utils.exceptions import ConditioningError, InvalidInputError

logger = logging.getLogger(__name__)


def _unit_vectors(directions: Sequence[Direction]) -> np.ndarray:
    return np.array([d.unit_vector() for d in directions])


def _gram_from_vectors(L: int, vectors: np.ndarray) -> np.ndarray:
    return np.atleast_2d(legendre_P(L, np.clip(vectors @ vectors.T, -1.0, 1.0)))


def _line_angles(vectors: np.ndarray) -> np.ndarray:
    """Pairwise line angles, upper triangle only"""
    i, j = np.triu_indices(len(vectors), k=1)
    cosines = np.abs(np.sum(vectors[i] * vectors[j], axis=1))
    return np.arccos(np.clip(cosines, 0.0, 1.0))


def _condition(matrix: np.ndarray) -> float:
    cond = float(np.linalg.cond(matrix))
    return cond if math.isfinite(cond) else math.inf


def legendre_gram(L: int, directions: Sequence[Direction]) -> np.ndarray:
    """[P_L]_{jk} = P_L(cos chi_jk), cos chi from the spherical law of cosines"""
    n = len(directions)
    gram = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            gram[j, k] = 1.0 if j == k else legendre_P(L, directions[j].cos_angle_to(directions[k]))
    return gram


def harmonic_matrix(L: int, directions: Sequence[Direction]) -> np.ndarray:
    """[Y_L]_{jm} = Y_Lm(n_j), columns m = -L ... L"""
    return np.array([harmonic_row(L, d) for d in directions])


def min_line_angle(directions: Sequence[Direction]) -> float:
    if len(directions) < 2:
        return math.pi / 2
    return float(np.min(_line_angles(_unit_vectors(directions))))


@dataclass(frozen=True)
class DirectionSet:
    """2L+1 measurement directions for order L with their conditioning."""

    L: int
    directions: Tuple[Direction, ...]
    cond_P: float = field(init=False)
    cond_Y: float = field(init=False)
    min_angle: float = field(init=False)

    def __post_init__(self):
        L = int(self.L)
        directions = tuple(self.directions)
        if L < 0:
            raise InvalidInputError(f"Order must be >= 0, got {L}")
        if len(directions) != 2 * L + 1:
            raise InvalidInputError(f"Order L={L} needs {2 * L + 1} directions, got {len(directions)}")
        min_angle = min_line_angle(directions)
        if min_angle < 1e-9:
            raise ConditioningError("Coincident or antipodal measurement directions", math.inf, L)
        object.__setattr__(self, 'L', L)
        object.__setattr__(self, 'directions', directions)
        object.__setattr__(self, 'min_angle', min_angle)
        object.__setattr__(self, 'cond_P', _condition(legendre_gram(L, directions)))
        object.__setattr__(self, 'cond_Y', _condition(harmonic_matrix(L, directions)))

    @property
    def min_angle_deg(self) -> float:
        return math.degrees(self.min_angle)

    def gram(self) -> np.ndarray:
        return legendre_gram(self.L, self.directions)

    def harmonics(self) -> np.ndarray:
        return harmonic_matrix(self.L, self.directions)


_RING_THETA = math.atan(2.0)  # icosahedron vertices adjacent to a pole


def canonical_directions(L: int) -> Optional[DirectionSet]:
    """Known optimal line sets: +z, the coordinate axes, five icosahedral lines"""
    if L == 0:
        return DirectionSet(0, (AXIS_Z,))
    if L == 1:
        return DirectionSet(1, (AXIS_X, AXIS_Y, AXIS_Z))
    if L == 2:
        return DirectionSet(2, tuple(Direction(_RING_THETA, 2.0 * math.pi * k / 5) for k in range(5)))
    return None


def _angles_to_vectors(params: np.ndarray) -> np.ndarray:
    theta, phi = params[0::2], params[1::2]
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1)


def _maximize_log_det(L: int, vectors: np.ndarray) -> np.ndarray:
    """D-optimal start: maximize log det P_L over the sphere"""
    start = np.empty(2 * len(vectors))
    start[0::2] = np.arccos(np.clip(vectors[:, 2], -1.0, 1.0))
    start[1::2] = np.arctan2(vectors[:, 1], vectors[:, 0])

    def objective(params):
        sign, log_det = np.linalg.slogdet(_gram_from_vectors(L, _angles_to_vectors(params)))
        return -log_det if sign > 0 else 1e6

    result = minimize(objective, start, method='L-BFGS-B', options={'maxiter': Config.DESIGN_ITERATIONS})
    return _angles_to_vectors(result.x)


def _softmin_gradient(vectors: np.ndarray, sharpness: float) -> np.ndarray:
    n = len(vectors)
    i, j = np.triu_indices(n, k=1)
    dots = np.sum(vectors[i] * vectors[j], axis=1)
    cosines = np.clip(np.abs(dots), 0.0, 1.0 - 1e-12)
    angles = np.arccos(cosines)
    weights = np.exp(-sharpness * (angles - angles.min()))
    weights /= weights.sum()
    # d(angle)/d(n_i) = -sign(n_i . n_j) n_j / sqrt(1 - c^2)
    scale = -(weights * np.sign(dots) / np.sqrt(1.0 - cosines ** 2))[:, None]
    gradient = np.zeros_like(vectors)
    np.add.at(gradient, i, scale * vectors[j])
    np.add.at(gradient, j, scale * vectors[i])
    return gradient - np.sum(gradient * vectors, axis=1)[:, None] * vectors


def _spread_lines(L: int, vectors: np.ndarray) -> np.ndarray:
    """Soft-min ascent on line angles; a step is kept only if the minimum
    angle does not drop and cond(P_L) stays under the cap."""
    best = np.min(_line_angles(vectors))
    step = 0.05
    for _ in range(Config.DESIGN_ITERATIONS):
        gradient = _softmin_gradient(vectors, Config.DESIGN_SOFTMIN_SHARPNESS)
        candidate = vectors + step * gradient / max(np.max(np.linalg.norm(gradient, axis=1)), 1e-12)
        candidate /= np.linalg.norm(candidate, axis=1)[:, None]
        angle = np.min(_line_angles(candidate))
        if angle >= best and _condition(_gram_from_vectors(L, candidate)) <= Config.DESIGN_COND_CAP:
            vectors, best = candidate, angle
            step = min(step * 1.2, 0.2)
        else:
            step *= 0.5
            if step < 1e-10:
                break
    return vectors


def _optimize(L: int, seed: int) -> DirectionSet:
    rng = np.random.default_rng(seed)
    n = 2 * L + 1
    candidates = []
    for _ in range(Config.DESIGN_RESTARTS):
        vectors = rng.standard_normal((n, 3))
        vectors /= np.linalg.norm(vectors, axis=1)[:, None]
        vectors = _maximize_log_det(L, vectors)
        if _condition(_gram_from_vectors(L, vectors)) <= Config.DESIGN_COND_CAP:
            vectors = _spread_lines(L, vectors)
        cond = _condition(_gram_from_vectors(L, vectors))
        candidates.append((cond <= Config.DESIGN_COND_CAP, float(np.min(_line_angles(vectors))), -cond, vectors))
    feasible, _, _, vectors = max(candidates, key=lambda c: c[:3])
    if not feasible:
        logger.warning(f"No L={L} design met the condition cap {Config.DESIGN_COND_CAP}")
    return DirectionSet(L, tuple(Direction.from_vector(v) for v in vectors))


def design_directions(L: int, seed: int = 0) -> DirectionSet:
    """2L+1 well-spread lines for order L, deterministic in the seed"""
    if L < 0:
        raise InvalidInputError(f"Order must be >= 0, got {L}")
    design = canonical_directions(L)
    if design is None:
        design = _optimize(L, seed)
    logger.info(f"Designed L={L} directions: min angle {design.min_angle_deg:.4f} deg, "
                f"cond(P)={design.cond_P:.3g}")
    return design


def axis_directions() -> DirectionSet:
    return canonical_directions(1)


def direction_sets(max_order: int, seed: int = 0) -> List[DirectionSet]:
    """Designed sets for L = 0 ... max_order"""
    return [design_directions(L, seed) for L in range(max_order + 1)]
