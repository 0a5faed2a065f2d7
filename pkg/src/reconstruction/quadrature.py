"""Product quadrature on the sphere: Gauss-Legendre in cos(theta) x uniform phi."""

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.rotations import Direction
from src.utils.exceptions import InvalidInputError

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: Tuple[Tuple[Direction, float], ...]

    def __post_init__(self):
        nodes = tuple((direction, float(weight)) for direction, weight in self.nodes)
        if not nodes:
            raise InvalidInputError("A quadrature grid needs at least one node")
        if any(weight <= 0.0 for _, weight in nodes):
            raise InvalidInputError("Quadrature weights must be positive")
        total = math.fsum(weight for _, weight in nodes)
        if abs(total - FOUR_PI) > 1e-12:
            raise InvalidInputError(f"Quadrature weights sum to {total}, expected 4 pi")
        object.__setattr__(self, 'nodes', nodes)

    @property
    def directions(self) -> List[Direction]:
        return [direction for direction, _ in self.nodes]

    @property
    def weights(self) -> np.ndarray:
        return np.array([weight for _, weight in self.nodes])

    def integrate(self, function: Callable[[Direction], complex]) -> complex:
        return complex(sum(weight * function(direction) for direction, weight in self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)


def product_grid(n_theta: int, n_phi: int) -> QuadratureGrid:
    """Exact for integrands of degree < 2 n_theta in cos(theta) and |m| < n_phi"""
    if n_theta < 1 or n_phi < 1:
        raise InvalidInputError(f"Grid sizes must be positive, got ({n_theta}, {n_phi})")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    step = 2.0 * math.pi / n_phi
    nodes = []
    for xi, wi in zip(x, w):
        theta = math.acos(float(xi))
        for k in range(n_phi):
            nodes.append((Direction(theta, k * step), float(wi) * step))
    return QuadratureGrid(tuple(nodes))


def default_grid(K: HalfIntLike) -> QuadratureGrid:
    """2K+1 Gauss-Legendre nodes x 4K+2 azimuths, exact through degree 4K"""
    two_k = HalfInt.of(K).twice_value
    return product_grid(two_k + 1, 2 * two_k + 2)
