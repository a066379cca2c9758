"""Input validation helpers shared by the public entry points."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

LatticeVector = tuple  # tuple[Fraction, ...]


class DimensionError(ValueError):
    """Raised when objects of different ambient dimension are combined."""


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions, and ``"p/q"`` strings to an exact Fraction.

    Floats are rejected: exact paths must never silently absorb rounding.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (Fraction, int)) or isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def as_vector(coords: Iterable) -> LatticeVector:
    return tuple(as_fraction(c) for c in coords)


def as_int_vector(coords: Iterable) -> tuple[int, ...]:
    out = []
    for c in coords:
        f = as_fraction(c)
        if f.denominator != 1:
            raise ValueError(f"expected an integer entry, got {f}")
        out.append(int(f))
    return tuple(out)


def check_same_dim(*vectors: Sequence) -> int:
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def check_positive(x, name: str = "value") -> Fraction:
    f = as_fraction(x)
    if f <= 0:
        raise ValueError(f"{name} must be positive, got {f}")
    return f


def fraction_str(x) -> str:
    """Serialize a rational as ``"p/q"`` (denominator always present)."""
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"
