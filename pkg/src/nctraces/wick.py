"""Pairing sums for vacuum expectations of field products.

``free_wick`` sums over non-crossing pairings, ``boolean_wick`` over the single
interval pairing and ``classical_wick`` over all pairings (Isserlis).  A pair
``(i, j)`` with ``i < j`` contributes ``<f_i, f_j>``: the left factor
annihilates what the right factor created.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .partitions import (
    SetPartition,
    enumerate_noncrossing_pairings,
    enumerate_pair_partitions,
    interval_pairing,
)
from .scalars import GaussianRational, Scalar, conj, is_real, simplify


class GramError(ValueError):
    """Gram matrix is malformed, non-Hermitian or has an invalid diagonal."""


@dataclass(frozen=True)
class GramSpace:
    """Vectors ``f_0, ..., f_{k-1}`` known only through ``gram[i][j] = <f_i, f_j>``."""

    gram: tuple[tuple[Scalar, ...], ...]
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        g = tuple(tuple(simplify(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        k = len(g)
        if any(len(row) != k for row in g):
            raise GramError("Gram matrix must be square")
        for i in range(k):
            if not is_real(g[i][i]) or simplify(g[i][i]) < 0:
                raise GramError(f"diagonal entry {i} must be real and nonnegative")
            for j in range(i + 1, k):
                if g[i][j] != conj(g[j][i]):
                    raise GramError(f"Gram is not Hermitian at ({i}, {j})")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"f{i + 1}" for i in range(k)))
        elif len(self.names) != k:
            raise GramError("one name per vector required")

    @classmethod
    def orthonormal(cls, k: int, names: Sequence[str] = ()) -> GramSpace:
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(k)) for i in range(k)), tuple(names))

    @property
    def k(self) -> int:
        return len(self.gram)

    def inner(self, i: int, j: int) -> Scalar:
        return self.gram[i][j]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown vector {name!r}") from None

    def is_real(self) -> bool:
        return all(is_real(x) for row in self.gram for x in row)

    def extend(self, coefficients: Sequence[Scalar], name: str = "") -> GramSpace:
        """Append ``g = sum_t c_t f_t``; inner products follow sesquilinearity
        (antilinear in the first slot)."""
        k = self.k
        new_col = [sum((self.gram[i][t] * coefficients[t] for t in range(k)), Fraction(0)) for i in range(k)]
        norm = sum((conj(coefficients[s]) * new_col[s] for s in range(k)), Fraction(0))
        rows = [tuple(self.gram[i]) + (new_col[i],) for i in range(k)]
        rows.append(tuple(conj(x) for x in new_col) + (norm,))
        return GramSpace(tuple(rows), self.names + (name or f"f{k + 1}",))


def _check_word(space: GramSpace, word: Sequence[int]) -> None:
    for v in word:
        if not 0 <= v < space.k:
            raise IndexError(f"vector index {v} out of range for {space.k} vectors")


def pairing_sum(pairings: Iterable[SetPartition], weight: Callable[[int, int], Scalar]) -> Scalar:
    """``sum_pi prod_{(i<j) in pi} weight(i, j)`` with early exit on zero factors (1-based)."""
    total: Scalar = Fraction(0)
    for p in pairings:
        term: Scalar = Fraction(1)
        for i, j in p.blocks:
            w = weight(i, j)
            if not w:
                term = 0
                break
            term = term * w
        if term:
            total = total + term
    return simplify(total)


def _weight(space: GramSpace, word: Sequence[int]):
    return lambda i, j: space.gram[word[i - 1]][word[j - 1]]


def free_wick(space: GramSpace, word: Sequence[int]) -> Scalar:
    """Sum over ``NC_2(n)`` of products of Gram entries."""
    _check_word(space, word)
    if not word or len(word) % 2:
        return Fraction(int(not word))
    return pairing_sum(enumerate_noncrossing_pairings(len(word)), _weight(space, word))


def boolean_wick(space: GramSpace, word: Sequence[int]) -> Scalar:
    """``prod_i <f_{2i-1}, f_{2i}>`` for even length, ``0`` for odd."""
    _check_word(space, word)
    if not word:
        return Fraction(1)
    p = interval_pairing(len(word))
    return pairing_sum([] if p is None else [p], _weight(space, word))


def classical_wick(space: GramSpace, word: Sequence[int]) -> Scalar:
    """Isserlis sum over all pairings ``P_2(n)``."""
    _check_word(space, word)
    if not word or len(word) % 2:
        return Fraction(int(not word))
    return pairing_sum(enumerate_pair_partitions(len(word)), _weight(space, word))
