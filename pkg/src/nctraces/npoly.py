"""Laurent polynomials in the formal dimension ``N`` with exact coefficients."""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping

from .scalars import (
    GaussianRational,
    Scalar,
    format_scalar,
    parse_scalar,
    scalar_from_record,
    scalar_record,
    simplify,
)

NEG_INF = -math.inf


class NPolynomial:
    """``sum_k c_k N^k`` over integer ``k``; zero coefficients are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, Scalar] | None = None) -> None:
        clean = {}
        for k, c in (terms or {}).items():
            c = simplify(c)
            if c:
                clean[int(k)] = c
        self._terms = clean

    @classmethod
    def constant(cls, c: Scalar) -> NPolynomial:
        return cls({0: c})

    @classmethod
    def monomial(cls, power: int, c: Scalar = 1) -> NPolynomial:
        return cls({power: c})

    @property
    def terms(self) -> dict[int, Scalar]:
        return dict(self._terms)

    def coeff(self, power: int) -> Scalar:
        return self._terms.get(power, Fraction(0))

    @property
    def degree(self) -> int | float:
        """Largest power present, ``-inf`` for the zero polynomial."""
        return max(self._terms) if self._terms else NEG_INF

    def is_zero(self) -> bool:
        return not self._terms

    def evaluate(self, n: int) -> Scalar:
        total: Scalar = Fraction(0)
        for k, c in self._terms.items():
            total = total + c * Fraction(n) ** k
        return simplify(total)

    @staticmethod
    def _coerce(other):
        if isinstance(other, NPolynomial):
            return other
        if isinstance(other, (int, Fraction, GaussianRational)):
            return NPolynomial.constant(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for k, c in o._terms.items():
            out[k] = out.get(k, 0) + c
        return NPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return NPolynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict[int, Scalar] = {}
        for a, ca in self._terms.items():
            for b, cb in o._terms.items():
                out[a + b] = out.get(a + b, 0) + ca * cb
        return NPolynomial(out)

    __rmul__ = __mul__

    def shift(self, power: int) -> NPolynomial:
        """Multiply by ``N**power``."""
        return NPolynomial({k + power: c for k, c in self._terms.items()})

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        return f"NPolynomial({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for k in sorted(self._terms, reverse=True):
            c = self._terms[k]
            negative = not isinstance(c, GaussianRational) and c < 0
            mag = -c if negative else c
            if k == 0:
                body = format_scalar(mag)
            else:
                mono = "N" if k == 1 else f"N^{k}"
                body = mono if mag == 1 else f"{format_scalar(mag)}*{mono}"
            if not pieces:
                pieces.append(("-" if negative else "") + body)
            else:
                pieces.append((" - " if negative else " + ") + body)
        return "".join(pieces)

    _TERM = re.compile(r"^(?:(?P<c>\([^)]*\)|\d+(?:/\d+)?)(?:\*)?)?(?P<n>N(?:\^(?P<k>-?\d+))?)?$")

    @classmethod
    def parse(cls, text: str) -> NPolynomial:
        """Inverse of ``str()``."""
        text = text.strip()
        if text == "0":
            return cls()
        tokens = re.split(r"\s+([+-])\s+", text)
        signs = ["+"] + tokens[1::2]
        bodies = tokens[0::2]
        out: dict[int, Scalar] = {}
        for sign, body in zip(signs, bodies):
            if body.startswith("-"):
                sign = "-" if sign == "+" else "+"
                body = body[1:]
            m = cls._TERM.match(body)
            if not m or (m.group("c") is None and m.group("n") is None):
                raise ValueError(f"cannot parse polynomial term {body!r}")
            c = parse_scalar(m.group("c")) if m.group("c") else Fraction(1)
            if m.group("n") is None:
                k = 0
            else:
                k = int(m.group("k")) if m.group("k") else 1
            out[k] = out.get(k, 0) + (-c if sign == "-" else c)
        return cls(out)

    def to_records(self) -> list[list[int]]:
        """``[[power, num, den(, imag_num, imag_den)], ...]`` in descending powers."""
        return [[k] + scalar_record(self._terms[k]) for k in sorted(self._terms, reverse=True)]

    @classmethod
    def from_records(cls, records: Iterable[Iterable[int]]) -> NPolynomial:
        return cls({rec[0]: scalar_from_record(list(rec[1:])) for rec in map(list, records)})


def leading_term(p: NPolynomial) -> tuple[int | float, Scalar]:
    """``(degree, coefficient)``; ``(-inf, 0)`` for the zero polynomial."""
    if p.is_zero():
        return NEG_INF, Fraction(0)
    d = p.degree
    return d, p.coeff(d)
