"""Helpers for the dual exact/real arithmetic used throughout the package."""

from fractions import Fraction
from numbers import Rational
import math

REAL_SUM_TOL = 1e-12


def as_rational(x):
    """Coerce ``x`` to a Fraction.

    Strings accept ``"p/q"`` and decimal notation. Floats go through their
    shortest decimal repr, so ``0.3`` becomes ``3/10`` rather than the binary
    neighbour of 0.3.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not weights")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    # numpy scalars and friends
    return Fraction(repr(float(x)))


def is_exact(values):
    return all(isinstance(v, Fraction) for v in values)


def to_float(x):
    return float(x)


def number_to_json(x):
    """Exact values become ``"p/q"`` strings, reals stay JSON numbers."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, (int, float)):
        return x
    return float(x)


def number_from_json(x, exact=True):
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    return as_rational(x) if exact else float(x)


def popcount(x):
    return bin(x).count("1")
