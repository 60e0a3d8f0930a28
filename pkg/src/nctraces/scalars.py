"""Exact scalars: rationals (``fractions.Fraction``) and Gaussian rationals.

Every quantity in the package is exact.  Real values are plain ``Fraction``
(or ``int``); complex values use :class:`GaussianRational`, which mixes freely
with both.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


class GaussianRational:
    """``re + im*i`` with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rational = 0, im: Rational = 0) -> None:
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other, 0)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero")
        n = self * o.conjugate()
        return GaussianRational(n.re / d, n.im / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / (self ** -k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> GaussianRational:
        return GaussianRational(self.re, -self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


Scalar = Union[int, Fraction, GaussianRational]


def simplify(x: Scalar) -> Scalar:
    """Collapse a Gaussian rational with zero imaginary part to ``Fraction``."""
    if isinstance(x, GaussianRational):
        return x.re if x.im == 0 else x
    return Fraction(x)


def conj(x: Scalar) -> Scalar:
    return x.conjugate()


def is_real(x: Scalar) -> bool:
    return not isinstance(x, GaussianRational) or x.im == 0


def real_part(x: Scalar) -> Fraction:
    return x.re if isinstance(x, GaussianRational) else Fraction(x)


_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


class ScalarSyntaxError(ValueError):
    """Raised for malformed or inexact scalar literals."""


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not _RATIONAL.match(text):
        raise ScalarSyntaxError(f"not an exact rational: {text!r}")
    value = Fraction(text)
    return value


def parse_scalar(text: str) -> Scalar:
    """Parse ``3``, ``-1/2`` or a Gaussian pair ``(re,im)``.  Floats are rejected."""
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        parts = text[1:-1].split(",")
        if len(parts) != 2:
            raise ScalarSyntaxError(f"Gaussian rational must be (re,im): {text!r}")
        return simplify(GaussianRational(parse_rational(parts[0]), parse_rational(parts[1])))
    return parse_rational(text)


def _format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x: Scalar) -> str:
    """Inverse of :func:`parse_scalar`."""
    x = simplify(x)
    if isinstance(x, GaussianRational):
        return f"({_format_rational(x.re)},{_format_rational(x.im)})"
    return _format_rational(x)


def scalar_record(x: Scalar) -> list[int]:
    """``[num, den]`` or ``[num, den, imag_num, imag_den]``."""
    x = simplify(x)
    if isinstance(x, GaussianRational):
        return [x.re.numerator, x.re.denominator, x.im.numerator, x.im.denominator]
    return [x.numerator, x.denominator]


def scalar_from_record(rec) -> Scalar:
    if len(rec) == 2:
        return Fraction(rec[0], rec[1])
    return simplify(GaussianRational(Fraction(rec[0], rec[1]), Fraction(rec[2], rec[3])))
