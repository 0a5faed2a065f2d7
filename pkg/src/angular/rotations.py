"""Rotation parametrizations: Euler angles (z-y-z) and sphere directions."""

import math
from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import InvalidInputError

TWO_PI = 2.0 * math.pi


def _wrap(angle: float) -> float:
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


@dataclass(frozen=True)
class EulerAngles:
    """R(phi, theta, psi) = exp(-i phi Jz) exp(-i theta Jy) exp(-i psi Jz).

    Angles are normalized to theta in [0, pi] and phi, psi in [0, 2 pi); the
    normalization preserves the rotation up to the SU(2) sign.
    """

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        phi, theta, psi = float(self.phi), float(self.theta), float(self.psi)
        if not all(math.isfinite(a) for a in (phi, theta, psi)):
            raise InvalidInputError(f"Euler angles must be finite: {(phi, theta, psi)}")
        theta = _wrap(theta)
        if theta > math.pi:
            # R_y(-t) = R_z(pi) R_y(t) R_z(-pi)
            theta = TWO_PI - theta
            phi += math.pi
            psi -= math.pi
        object.__setattr__(self, 'phi', _wrap(phi))
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'psi', _wrap(psi))

    @classmethod
    def identity(cls) -> 'EulerAngles':
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_direction(cls, direction: 'Direction', psi: float = 0.0) -> 'EulerAngles':
        return cls(direction.phi, direction.theta, psi)

    def inverse(self) -> 'EulerAngles':
        """R(g)^-1 = R(pi - psi, theta, -pi - phi)"""
        return EulerAngles(math.pi - self.psi, self.theta, -math.pi - self.phi)

    @property
    def direction(self) -> 'Direction':
        return Direction(self.theta, self.phi)

    def as_tuple(self):
        return (self.phi, self.theta, self.psi)


@dataclass(frozen=True)
class Direction:
    """A point (theta, phi) on the unit sphere."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise InvalidInputError(f"Direction angles must be finite: {(theta, phi)}")
        theta = _wrap(theta)
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'phi', _wrap(phi))

    @classmethod
    def from_vector(cls, vector) -> 'Direction':
        v = np.asarray(vector, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise InvalidInputError("Zero vector has no direction")
        x, y, z = v / norm
        return cls(math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x))

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def cos_angle_to(self, other: 'Direction') -> float:
        """Spherical law of cosines"""
        return (math.cos(self.theta) * math.cos(other.theta)
                + math.sin(self.theta) * math.sin(other.theta) * math.cos(self.phi - other.phi))

    def euler(self, psi: float = 0.0) -> EulerAngles:
        return EulerAngles(self.phi, self.theta, psi)


AXIS_X = Direction(math.pi / 2, 0.0)
AXIS_Y = Direction(math.pi / 2, math.pi / 2)
AXIS_Z = Direction(0.0, 0.0)
