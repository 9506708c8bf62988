"""Dyadic rationals.

All exact quantities in this package are carried as :class:`fractions.Fraction`.
For values whose denominator is a power of two (Fourier coefficients,
influences, tree covariances) :class:`DyadicRational` gives the reduced
``(numerator, log2_denominator)`` form used by the CSV exports.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple


class DyadicRational(NamedTuple):
    numerator: int
    log2_denominator: int

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "DyadicRational":
        q = Fraction(value)
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not dyadic")
        return cls(q.numerator, den.bit_length() - 1)

    @classmethod
    def from_scaled(cls, scaled: int, log2_scale: int) -> "DyadicRational":
        """Reduce ``scaled / 2**log2_scale``."""
        scaled = int(scaled)
        if scaled == 0:
            return cls(0, 0)
        shift = min((scaled & -scaled).bit_length() - 1, log2_scale)
        return cls(scaled >> shift, log2_scale - shift)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def __float__(self) -> float:
        return math.ldexp(self.numerator, -self.log2_denominator)

    def __str__(self) -> str:
        if self.log2_denominator == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.log2_denominator}"


def log2(q: Fraction | int) -> float:
    """log2 of a positive rational without going through a float quotient."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("log2 of a non-positive value")
    return math.log2(q.numerator) - math.log2(q.denominator)


def parse_fraction(text: str | int | float | Fraction) -> Fraction:
    """Accept ``"3/4"``, ``"-0.25"``, ints, floats (exact binary value) or Fractions."""
    if isinstance(text, str):
        return Fraction(text.strip())
    return Fraction(text)
