"""Moment-cumulant transforms for classical, free and Boolean independence.

A cumulant of a tuple of (noncommuting) variables is the unique solution of

    moment(x_1, ..., x_n) = sum over pi in L(n) of prod over blocks B of c(x_B)

where ``L(n)`` is ``P(n)``, ``NC(n)`` or ``I(n)`` and ``x_B`` is the subtuple
in its induced order.  Scalars only need ``+``, ``-`` and ``*``, so exact
rationals, Gaussian rationals and :class:`~nctraces.npoly.NPolynomial` all work.
"""

from __future__ import annotations

import enum
import threading
from fractions import Fraction
from functools import reduce
from math import comb
from operator import mul
from typing import Callable, Hashable, Sequence

from .partitions import (
    SetPartition,
    enumerate_interval_partitions,
    enumerate_noncrossing_partitions,
    enumerate_set_partitions,
)


class CumulantKind(enum.Enum):
    CLASSICAL = "classical"
    FREE = "free"
    BOOLEAN = "boolean"

    def lattice(self, n: int) -> list[SetPartition]:
        if self is CumulantKind.CLASSICAL:
            return enumerate_set_partitions(n)
        if self is CumulantKind.FREE:
            return enumerate_noncrossing_partitions(n)
        return enumerate_interval_partitions(n)


Tags = tuple[Hashable, ...]


class MomentFunctional:
    """Memoizing wrapper around a moment callback on ordered tag tuples.

    The callback is assumed deterministic but not multilinear.  Cumulants
    computed from this functional are cached alongside the moments.
    """

    def __init__(self, func: Callable[[Tags], object]) -> None:
        self._func = func
        self._moments: dict[Tags, object] = {}
        self._cumulants: dict[tuple[CumulantKind, Tags], object] = {}
        self._lock = threading.RLock()

    def __call__(self, tags: Sequence[Hashable]) -> object:
        tags = tuple(tags)
        with self._lock:
            if tags in self._moments:
                return self._moments[tags]
        value = self._func(tags)
        with self._lock:
            self._moments.setdefault(tags, value)
        return value


def _lattice_terms(kind: CumulantKind, n: int) -> list[tuple[tuple[int, ...], ...]]:
    return [p.blocks for p in kind.lattice(n)]


def cumulant_from_moments(kind: CumulantKind, m: MomentFunctional | Callable, vars: Sequence[Hashable]):
    """Cumulant of ``vars`` obtained by subtracting every non-maximal lattice term from the moment."""
    if not isinstance(m, MomentFunctional):
        m = MomentFunctional(m)
    vars = tuple(vars)
    if not vars:
        raise ValueError("cumulants need at least one variable")
    return _cumulant(kind, m, vars)


def _cumulant(kind: CumulantKind, m: MomentFunctional, vars: Tags):
    key = (kind, vars)
    with m._lock:
        if key in m._cumulants:
            return m._cumulants[key]
    n = len(vars)
    value = m(vars)
    if n > 1:
        for blocks in _lattice_terms(kind, n):
            if len(blocks) == 1:
                continue
            term = reduce(mul, (_cumulant(kind, m, tuple(vars[x - 1] for x in b)) for b in blocks))
            value = value - term
    with m._lock:
        m._cumulants.setdefault(key, value)
    return value


def moment_from_cumulants(kind: CumulantKind, c: Callable[[Tags], object], vars: Sequence[Hashable]):
    """Direct lattice sum of products of cumulants over blocks."""
    vars = tuple(vars)
    total = None
    for blocks in _lattice_terms(kind, len(vars)):
        term = reduce(mul, (c(tuple(vars[x - 1] for x in b)) for b in blocks))
        total = term if total is None else total + term
    return total


def univariate_transform(kind: CumulantKind, seq: Sequence, direction: str = "to_cumulants") -> list:
    """Single-variable transform of ``(a_1, ..., a_n)``.

    ``direction`` is ``"to_cumulants"`` or ``"to_moments"``.  Uses the
    one-variable recursions (binomial for classical, composition-power for
    free, convolution for Boolean), which agree with the lattice sums.
    """
    if len(seq) > 12:
        raise ValueError("univariate transforms support at most 12 terms")
    if direction not in ("to_cumulants", "to_moments"):
        raise ValueError(f"unknown direction {direction!r}")
    n = len(seq)
    seq = list(seq)
    zero = seq[0] * 0 if seq else Fraction(0)
    one = zero + 1
    if direction == "to_moments":
        cum = seq
        mom = [one]
        for k in range(1, n + 1):
            mom.append(_moment_from_univariate(kind, cum, mom, k, zero, one))
        return mom[1:]
    mom = [one] + seq
    cum: list = []
    for k in range(1, n + 1):
        cum.append(zero)
        # the recursion is linear in cum[k-1] with coefficient 1
        rest = _moment_from_univariate(kind, cum, mom, k, zero, one)
        cum[k - 1] = mom[k] - rest
    return cum


def _moment_from_univariate(kind, cum, mom, n, zero, one):
    total = zero
    if kind is CumulantKind.CLASSICAL:
        for k in range(1, n + 1):
            total = total + comb(n - 1, k - 1) * cum[k - 1] * mom[n - k]
    elif kind is CumulantKind.BOOLEAN:
        for k in range(1, n + 1):
            total = total + cum[k - 1] * mom[n - k]
    else:
        # m_n = sum_s kappa_s [x^(n-s)] M(x)^s with M = 1 + m_1 x + ...
        power = [one] + [zero] * (n - 1)
        for s in range(1, n + 1):
            power = [sum((power[i] * mom[j - i] for i in range(j + 1)), zero) for j in range(n)]
            total = total + cum[s - 1] * power[n - s]
    return total
