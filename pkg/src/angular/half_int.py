"""Exact half-integer angular-momentum labels stored as doubled integers."""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Union

from src.utils.exceptions import InvalidInputError

HalfIntLike = Union['HalfInt', int, float, str, Fraction]


@dataclass(frozen=True, order=True)
class HalfInt:
    """A value j with 2j integral. `twice_value` stores 2j."""

    twice_value: int

    def __post_init__(self):
        if isinstance(self.twice_value, bool) or not isinstance(self.twice_value, int):
            raise InvalidInputError(f"twice_value must be an int, got {self.twice_value!r}")

    @classmethod
    def of(cls, value: HalfIntLike) -> 'HalfInt':
        """Coerce ints, floats, Fractions and strings like '1/2' or '1.5'"""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, bool):
            raise InvalidInputError(f"Not an angular-momentum label: {value!r}")
        if isinstance(value, int):
            return cls(2 * value)
        if isinstance(value, str):
            try:
                value = Fraction(value.strip())
            except (ValueError, ZeroDivisionError) as e:
                raise InvalidInputError(f"Cannot parse half-integer {value!r}: {e}")
        if isinstance(value, float):
            doubled = 2.0 * value
            if abs(doubled - round(doubled)) > 1e-9:
                raise InvalidInputError(f"{value} is not a half-integer")
            return cls(int(round(doubled)))
        if isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise InvalidInputError(f"{value} is not a half-integer")
            return cls(int(doubled))
        raise InvalidInputError(f"Not an angular-momentum label: {value!r}")

    @classmethod
    def from_twice(cls, twice_value: int) -> 'HalfInt':
        return cls(int(twice_value))

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    @property
    def dimension(self) -> int:
        """2j + 1 for a magnitude label"""
        return self.twice_value + 1

    def projections(self) -> List['HalfInt']:
        """m = j, j-1, ..., -j (the basis order used throughout)"""
        if self.twice_value < 0:
            raise InvalidInputError(f"Magnitude label must be non-negative, got {self}")
        return [HalfInt(t) for t in range(self.twice_value, -self.twice_value - 1, -2)]

    def pairs_with(self, m: 'HalfInt') -> bool:
        """True when (self, m) is a valid (j, m) pair"""
        return (self.twice_value >= 0 and abs(m.twice_value) <= self.twice_value
                and (self.twice_value - m.twice_value) % 2 == 0)

    def __add__(self, other: HalfIntLike) -> 'HalfInt':
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other: HalfIntLike) -> 'HalfInt':
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __rsub__(self, other: HalfIntLike) -> 'HalfInt':
        return HalfInt(HalfInt.of(other).twice_value - self.twice_value)

    def __neg__(self) -> 'HalfInt':
        return HalfInt(-self.twice_value)

    def __abs__(self) -> 'HalfInt':
        return HalfInt(abs(self.twice_value))

    def __float__(self) -> float:
        return self.twice_value / 2.0

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


def half(value: HalfIntLike) -> HalfInt:
    """Shorthand for HalfInt.of"""
    return HalfInt.of(value)


def validate_pair(j: HalfInt, m: HalfInt) -> None:
    if not j.pairs_with(m):
        raise InvalidInputError(f"Invalid (j, m) pair ({j}, {m})")
