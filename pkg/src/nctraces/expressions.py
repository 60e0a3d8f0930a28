"""Matrix words and products of their traces.

A word is a tuple of letters.  Letters are

* :class:`RandomLetter` -- a random matrix ``S_N(f)``, ``B_N(f)`` or ``G_N(f)``;
* :class:`ConstantLetter` -- a constant profile ``A0 (x) I_{N/d0}``;
* :class:`Centered` -- ``W - tr(W) I`` with the *random* normalized trace;
* :class:`Combination` -- ``sum_t c_t W_t``; the empty word is the identity.

A :class:`TraceExpression` stands for ``Tr(W_1) Tr(W_2) ... Tr(W_r)`` in that order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .scalars import Scalar, simplify
from .wick import GramSpace


class Ensemble(enum.Enum):
    FREE_CIRCULAR = "free-circular"
    BOOLEAN_BERNOULLI = "boolean-bernoulli"
    CLASSICAL_GAUSSIAN = "classical-gaussian"

    @property
    def symbol(self) -> str:
        return {"free-circular": "S", "boolean-bernoulli": "B", "classical-gaussian": "G"}[self.value]


class ExpressionError(ValueError):
    """Malformed expression: mixed ensembles, unknown names, inconsistent profiles."""


@dataclass(frozen=True)
class RandomLetter:
    ensemble: Ensemble
    vector: int

    def __str__(self) -> str:
        return f"{self.ensemble.symbol}:{self.vector}"


@dataclass(frozen=True)
class ConstantLetter:
    name: str

    def __str__(self) -> str:
        return f"C:{self.name}"


@dataclass(frozen=True)
class Centered:
    """``W - tr(W) I`` where ``tr(W) = Tr(W)/N`` is itself random."""

    word: tuple

    def __str__(self) -> str:
        return "(" + " ".join(map(str, self.word)) + ")~"


@dataclass(frozen=True)
class Combination:
    """Linear combination ``sum c_t W_t`` of words (the empty word is ``I``)."""

    terms: tuple[tuple[Scalar, tuple], ...]

    def __str__(self) -> str:
        parts = []
        for c, w in self.terms:
            body = " ".join(map(str, w)) or "I"
            parts.append(f"{c}*[{body}]")
        return "{" + " + ".join(parts) + "}"


Letter = Union[RandomLetter, ConstantLetter, Centered, Combination]
Word = tuple  # tuple[Letter, ...]


def S(vector: int) -> RandomLetter:
    return RandomLetter(Ensemble.FREE_CIRCULAR, vector)


def B(vector: int) -> RandomLetter:
    return RandomLetter(Ensemble.BOOLEAN_BERNOULLI, vector)


def G(vector: int) -> RandomLetter:
    return RandomLetter(Ensemble.CLASSICAL_GAUSSIAN, vector)


def C(name: str) -> ConstantLetter:
    return ConstantLetter(name)


def centered_power(letter: RandomLetter, k: int) -> Centered:
    """``X^k - tr(X^k) I``."""
    return Centered((letter,) * k)


def shifted(word: Sequence[Letter], scalar: Scalar) -> Combination:
    """``W - scalar * I`` (deterministic centering)."""
    return Combination(((Fraction(1), tuple(word)), (-simplify(scalar), ())))


def _kron_identity(matrix, reps: int):
    d = len(matrix)
    out = [[Fraction(0)] * (d * reps) for _ in range(d * reps)]
    for a in range(d):
        for b in range(d):
            v = matrix[a][b]
            if v:
                for t in range(reps):
                    out[a * reps + t][b * reps + t] = v
    return tuple(tuple(row) for row in out)


@dataclass(frozen=True)
class ConstantProfile:
    """A constant matrix family realized at size ``N`` as ``matrix (x) I_{N/d0}``."""

    name: str
    matrix: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self) -> None:
        m = tuple(tuple(simplify(x) for x in row) for row in self.matrix)
        if not m or any(len(row) != len(m) for row in m):
            raise ExpressionError(f"constant {self.name!r} must be a nonempty square matrix")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, name: str = "I", d0: int = 1) -> ConstantProfile:
        return cls(name, tuple(tuple(Fraction(int(i == j)) for j in range(d0)) for i in range(d0)))

    @property
    def d0(self) -> int:
        return len(self.matrix)

    @property
    def tr(self) -> Scalar:
        """Normalized trace, independent of ``N``."""
        return simplify(sum((self.matrix[i][i] for i in range(self.d0)), Fraction(0)) / self.d0)

    @property
    def is_identity(self) -> bool:
        return all(self.matrix[i][j] == int(i == j) for i in range(self.d0) for j in range(self.d0))

    @property
    def is_centered(self) -> bool:
        return self.tr == 0

    def padded(self, d: int) -> ConstantProfile:
        """Same family with profile dimension ``d`` (a multiple of ``d0``)."""
        if d % self.d0:
            raise ExpressionError(f"cannot pad {self.name!r} from {self.d0} to {d}")
        return ConstantProfile(self.name, _kron_identity(self.matrix, d // self.d0))

    def realize(self, n: int) -> tuple[tuple[Scalar, ...], ...]:
        """The ``n x n`` matrix; ``n`` must be a multiple of ``d0``."""
        if n % self.d0:
            raise ExpressionError(f"N={n} is not a multiple of d0={self.d0} for {self.name!r}")
        return _kron_identity(self.matrix, n // self.d0)

    def centered(self, name: str | None = None) -> ConstantProfile:
        t = self.tr
        m = tuple(tuple(self.matrix[i][j] - (t if i == j else 0) for j in range(self.d0)) for i in range(self.d0))
        return ConstantProfile(name or f"{self.name}0", m)


def iter_letters(word: Sequence[Letter]):
    """All atomic letters appearing in ``word``, recursively."""
    for letter in word:
        if isinstance(letter, Centered):
            yield from iter_letters(letter.word)
        elif isinstance(letter, Combination):
            for _, w in letter.terms:
                yield from iter_letters(w)
        else:
            yield letter


def max_random_letters(word: Sequence[Letter]) -> int:
    """Largest number of random letters in any term of the expansion of ``word``."""
    total = 0
    for letter in word:
        if isinstance(letter, RandomLetter):
            total += 1
        elif isinstance(letter, Centered):
            total += max_random_letters(letter.word)
        elif isinstance(letter, Combination):
            total += max((max_random_letters(w) for _, w in letter.terms), default=0)
    return total


@dataclass(frozen=True)
class TraceExpression:
    """``Tr(W_1) ... Tr(W_r)`` over a shared Gram space and constant table."""

    words: tuple[Word, ...]
    gram: GramSpace
    constants: Mapping[str, ConstantProfile] = field(default_factory=dict)

    def __post_init__(self) -> None:
        words = tuple(tuple(w) for w in self.words)
        object.__setattr__(self, "words", words)
        if not words:
            raise ExpressionError("an expression needs at least one trace factor")
        for w in words:
            if not w:
                raise ExpressionError("words must be nonempty")
        ensembles = set()
        for w in words:
            for letter in iter_letters(w):
                if isinstance(letter, RandomLetter):
                    ensembles.add(letter.ensemble)
                    if not 0 <= letter.vector < self.gram.k:
                        raise ExpressionError(f"vector index {letter.vector} out of range")
                elif isinstance(letter, ConstantLetter):
                    if letter.name not in self.constants:
                        raise ExpressionError(f"undefined constant {letter.name!r}")
                else:
                    raise ExpressionError(f"unknown letter {letter!r}")
        if len(ensembles) > 1:
            raise ExpressionError("mixed ensembles in one expression: "
                                  + ", ".join(sorted(e.value for e in ensembles)))
        object.__setattr__(self, "_ensemble", next(iter(ensembles)) if ensembles else None)

    @property
    def ensemble(self) -> Ensemble | None:
        return self._ensemble

    @property
    def r(self) -> int:
        return len(self.words)

    @property
    def d0(self) -> int:
        """Common profile dimension of the constants used (``lcm``)."""
        used = {l.name for w in self.words for l in iter_letters(w) if isinstance(l, ConstantLetter)}
        return math.lcm(1, *(self.constants[n].d0 for n in used))

    @property
    def max_random_letters(self) -> int:
        return sum(max_random_letters(w) for w in self.words)

    def sub(self, indices: Sequence[int]) -> TraceExpression:
        """The product of the selected trace factors, in the given order."""
        return TraceExpression(tuple(self.words[i] for i in indices), self.gram, self.constants)

    def __str__(self) -> str:
        return " ".join("Tr(" + " ".join(map(str, w)) + ")" for w in self.words)
