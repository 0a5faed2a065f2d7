"""Angular-momentum special functions in the Condon-Shortley, z-y-z convention.

All (j, m) labels are HalfInt (or anything HalfInt.of accepts); matrices are
indexed m = j ... -j, i.e. row/column 0 is the stretched state m = j.
"""

import math
import logging
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import eval_legendre, sph_harm_y

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike, validate_pair
from src.angular.rotations import Direction, EulerAngles
from src.utils.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

_LN_FACTORIAL_TABLE = tuple(math.log(math.factorial(n))
                            for n in range(Config.LN_FACTORIAL_TABLE_SIZE + 1))


def ln_factorial(n: int) -> float:
    """ln(n!) from the table, Stirling series beyond it"""
    if n < 0:
        raise InvalidInputError(f"ln_factorial needs n >= 0, got {n}")
    if n < len(_LN_FACTORIAL_TABLE):
        return _LN_FACTORIAL_TABLE[n]
    x = float(n)
    return (x * math.log(x) - x + 0.5 * math.log(2.0 * math.pi * x)
            + 1.0 / (12.0 * x) - 1.0 / (360.0 * x ** 3) + 1.0 / (1260.0 * x ** 5))


def _tw(value: HalfIntLike) -> int:
    return HalfInt.of(value).twice_value


@lru_cache(maxsize=None)
def _clebsch_gordan_twice(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> float:
    # Racah's closed form, summed in log space with explicit signs.
    if tM != tm1 + tm2:
        return 0.0
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 + tJ) % 2:
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        if abs(tm) > tj or (tj - tm) % 2:
            return 0.0

    a = (tj1 + tj2 - tJ) // 2           # j1 + j2 - J
    b = (tj1 - tm1) // 2                # j1 - m1
    c = (tj2 + tm2) // 2                # j2 + m2
    d = (tJ - tj2 + tm1) // 2           # J - j2 + m1
    e = (tJ - tj1 - tm2) // 2           # J - j1 - m2

    ln_prefactor = 0.5 * (
        math.log(tJ + 1)
        + ln_factorial((tJ + tj1 - tj2) // 2) + ln_factorial((tJ - tj1 + tj2) // 2)
        + ln_factorial(a) - ln_factorial((tj1 + tj2 + tJ) // 2 + 1)
        + ln_factorial((tJ + tM) // 2) + ln_factorial((tJ - tM) // 2)
        + ln_factorial(b) + ln_factorial((tj1 + tm1) // 2)
        + ln_factorial((tj2 - tm2) // 2) + ln_factorial(c)
    )

    k_min = max(0, -d, -e)
    k_max = min(a, b, c)
    total = 0.0
    for k in range(k_min, k_max + 1):
        ln_term = ln_prefactor - (ln_factorial(k) + ln_factorial(a - k) + ln_factorial(b - k)
                                  + ln_factorial(c - k) + ln_factorial(d + k) + ln_factorial(e + k))
        total += (-1.0 if k % 2 else 1.0) * math.exp(ln_term)
    return total


def clebsch_gordan(j1: HalfIntLike, m1: HalfIntLike, j2: HalfIntLike, m2: HalfIntLike,
                   J: HalfIntLike, M: HalfIntLike) -> float:
    """C^{JM}_{j1 m1, j2 m2}; zero whenever a selection rule fails"""
    return _clebsch_gordan_twice(_tw(j1), _tw(m1), _tw(j2), _tw(m2), _tw(J), _tw(M))


def _small_d_twice(tj: int, tmp: int, tm: int, theta: float) -> float:
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    jpmp = (tj + tmp) // 2
    jmmp = (tj - tmp) // 2
    jpm = (tj + tm) // 2
    jmm = (tj - tm) // 2
    delta = (tmp - tm) // 2             # m' - m
    ln_norm = 0.5 * (ln_factorial(jpmp) + ln_factorial(jmmp) + ln_factorial(jpm) + ln_factorial(jmm))

    total = 0.0
    for k in range(max(0, -delta), min(jpm, jmmp) + 1):
        ln_coeff = ln_norm - (ln_factorial(jpm - k) + ln_factorial(k)
                              + ln_factorial(delta + k) + ln_factorial(jmmp - k))
        sign = -1.0 if (delta + k) % 2 else 1.0
        total += sign * math.exp(ln_coeff) * c ** (tj - delta - 2 * k) * s ** (delta + 2 * k)
    return total


def wigner_small_d(j: HalfIntLike, mp: HalfIntLike, m: HalfIntLike, theta: float) -> float:
    """d^j_{m'm}(theta) from Wigner's sum formula"""
    j, mp, m = HalfInt.of(j), HalfInt.of(mp), HalfInt.of(m)
    validate_pair(j, mp)
    validate_pair(j, m)
    return _small_d_twice(j.twice_value, mp.twice_value, m.twice_value, float(theta))


def wigner_D(j: HalfIntLike, mp: HalfIntLike, m: HalfIntLike, angles: EulerAngles) -> complex:
    """D^j_{m'm}(phi, theta, psi) = exp(-i m' phi) d^j_{m'm}(theta) exp(-i m psi)"""
    j, mp, m = HalfInt.of(j), HalfInt.of(mp), HalfInt.of(m)
    d = wigner_small_d(j, mp, m, angles.theta)
    phase = -(float(mp) * angles.phi + float(m) * angles.psi)
    return complex(math.cos(phase), math.sin(phase)) * d


def wigner_small_d_matrix(j: HalfIntLike, theta: float) -> np.ndarray:
    tj = _tw(j)
    labels = range(tj, -tj - 1, -2)
    return np.array([[_small_d_twice(tj, tmp, tm, float(theta)) for tm in labels] for tmp in labels])


def wigner_D_matrix(j: HalfIntLike, angles: EulerAngles) -> np.ndarray:
    """Full (2j+1)x(2j+1) D^j(g), rows m', columns m, both ordered j ... -j"""
    tj = _tw(j)
    m_values = np.arange(tj, -tj - 1, -2) / 2.0
    left = np.exp(-1j * m_values * angles.phi)
    right = np.exp(-1j * m_values * angles.psi)
    return left[:, None] * wigner_small_d_matrix(j, angles.theta) * right[None, :]


def legendre_P(L: int, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Legendre polynomial P_L on [-1, 1]; rounding slack is clipped"""
    if L < 0:
        raise InvalidInputError(f"Legendre degree must be >= 0, got {L}")
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + Config.LEGENDRE_SLACK):
        raise InvalidInputError(f"Legendre argument outside [-1, 1]: {x}")
    result = eval_legendre(L, np.clip(arr, -1.0, 1.0))
    return float(result) if np.ndim(result) == 0 else result


def spherical_harmonic(L: int, m: int, direction: Direction) -> complex:
    """Orthonormal Y_Lm(theta, phi) with the Condon-Shortley phase"""
    if L < 0 or abs(m) > L:
        raise InvalidInputError(f"Invalid harmonic indices L={L}, m={m}")
    return complex(sph_harm_y(L, m, direction.theta, direction.phi))


def harmonic_row(L: int, direction: Direction) -> np.ndarray:
    """[Y_{L,-L}, ..., Y_{L,L}] at one direction"""
    if L < 0:
        raise InvalidInputError(f"Harmonic degree must be >= 0, got {L}")
    return np.asarray(sph_harm_y(L, np.arange(-L, L + 1), direction.theta, direction.phi), dtype=complex)
