"""
Numeric value types for groupmix.

CountType converts count strings (like "200", "1e5", "100k", "2M") to
integers using decimal multipliers. Scalars in files and on the command
line are either exact rationals ("3/4", "0", "7") or floats ("0.25",
"1e-6"); rationals always serialize as "p/q" strings.
"""

import math
import re
from fractions import Fraction
from numbers import Integral, Rational, Real
from typing import Union

import numpy as np

Scalar = Union[Fraction, float]


class CountType:
    """
    Utility class for converting count strings to integer values.

    Supports decimal multipliers:
    - k/K: 1000
    - m/M: 1000000
    - g/G: 1000000000

    Examples:
        CountType("200")   -> 200
        CountType("100k")  -> 100000
        CountType("1e5")   -> 100000
    """

    MULTIPLIERS = {
        'k': 10 ** 3,
        'm': 10 ** 6,
        'g': 10 ** 9,
    }

    def __init__(self, count_str: Union[str, int, float]):
        """
        Initialize CountType with a count string, integer, or float.

        :param count_str: Count specification (e.g., "100k", "1e5", 64)
        """
        if isinstance(count_str, bool):
            raise ValueError(f"Invalid count: {count_str!r}")
        if isinstance(count_str, (int, np.integer)):
            self._count = int(count_str)
        elif isinstance(count_str, float):
            if not count_str.is_integer():
                raise ValueError(f"Count must be integral: {count_str}")
            self._count = int(count_str)
        else:
            self._count = self._parse_count_string(str(count_str))
        if self._count < 0:
            raise ValueError(f"Count cannot be negative: {self._count}")

    def _parse_count_string(self, count_str: str) -> int:
        """
        Parse a count string into an integer.

        :param count_str: Count string to parse
        :return: Count as integer
        :raises ValueError: If the count string format is invalid
        """
        count_str = count_str.strip()
        if not count_str:
            raise ValueError("Empty count string")

        match = re.match(r'^(\d+(?:\.\d+)?(?:[eE]\+?\d+)?)\s*([kmgKMG]?)$', count_str)
        if not match:
            raise ValueError(f"Invalid count format: '{count_str}'. Expected format: number[k|m|g]")

        number_str, multiplier = match.groups()
        value = Fraction(number_str)
        if multiplier:
            value *= self.MULTIPLIERS[multiplier.lower()]
        if value.denominator != 1:
            raise ValueError(f"Count must be integral: '{count_str}'")
        return int(value)

    def __int__(self) -> int:
        return self._count

    def __index__(self) -> int:
        return self._count

    def __str__(self) -> str:
        return str(self._count)

    def __repr__(self) -> str:
        return f"CountType({self._count})"

    def __eq__(self, other) -> bool:
        if isinstance(other, CountType):
            return self._count == other._count
        if isinstance(other, int):
            return self._count == other
        return False

    def __hash__(self) -> int:
        return hash(self._count)

    @property
    def count(self) -> int:
        """Get the integer value."""
        return self._count


def count_value(count_str: Union[str, int, float]) -> int:
    """
    Convert a count string to int.

    :param count_str: Count specification
    :return: Integer count
    """
    return CountType(count_str).count


_RATIONAL_RE = re.compile(r'^\s*[+-]?\d+\s*(/\s*\d+\s*)?$')


def parse_scalar(value) -> Scalar:
    """
    Parse a scalar from JSON or command-line input.

    Integers and "p/q" strings become exact Fractions; decimal or
    scientific strings and Python floats become floats.

    :param value: str, int, float or Fraction
    :return: Fraction or float
    """
    if isinstance(value, bool):
        raise ValueError(f"Invalid scalar: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"Non-finite scalar: {value!r}")
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if _RATIONAL_RE.match(text):
            result = Fraction(text.replace(' ', ''))
            return result
        try:
            result = float(text)
        except ValueError:
            raise ValueError(f"Invalid scalar: '{value}'. Expected p/q, an integer or a float") from None
        if not math.isfinite(result):
            raise ValueError(f"Non-finite scalar: '{value}'")
        return result
    raise ValueError(f"Invalid scalar type: {type(value).__name__}")


def format_scalar(value):
    """
    Render a scalar for JSON: rationals as "p/q" strings, floats as floats.

    repr() of a float is the shortest string that round-trips, so float
    output is lossless at 17 significant digits or fewer.

    :param value: Fraction, int or float-like
    :return: str or float
    """
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (Integral, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, Rational):
        return format_scalar(Fraction(value))
    if isinstance(value, Real):
        return float(value)
    raise ValueError(f"Cannot format scalar of type {type(value).__name__}")


def is_exact(value) -> bool:
    """True for Fraction and integer values."""
    return isinstance(value, (Fraction, Integral, np.integer)) and not isinstance(value, bool)
