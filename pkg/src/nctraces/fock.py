"""Exact Fock-space realizations of the random matrix ensembles.

Three flavors share one interface:

``full``       truncated full Fock space; ``l(e) + l(e')*`` fields give free
               (semi)circular families.
``boolean``    ``C Omega (+) H``; ``|e><Omega| + |Omega><e'|`` fields give Boolean
               independent Bernoulli families.
``symmetric``  polynomial (bosonic) realization ``a = d/dx``, ``a* = x`` in a
               monomial basis; gives classical Gaussian families.

Vectors of the Gram space are expanded in an orthonormal basis with rational
(or Gaussian rational) coordinates, so every operator is exact.  The
``1/sqrt(N)`` entry scaling is never materialized: a product of ``k`` random
entries picks up ``N**(-k/2)`` at the end, and only even ``k`` reach the vacuum.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

from .expressions import (
    Centered,
    Combination,
    ConstantLetter,
    Ensemble,
    RandomLetter,
    TraceExpression,
    Word,
    max_random_letters,
)
from .scalars import GaussianRational, Scalar, conj, real_part, simplify
from .wick import GramSpace

DEFAULT_MAX_DIMENSION = 20000


class ExactnessError(ValueError):
    """Truncation depth too small for an exact vacuum expectation."""


class RealizationError(ValueError):
    """The Gram matrix is not positive semidefinite, so no Hilbert space realizes it."""


class DimensionError(ValueError):
    """The materialized Fock basis outgrew the configured bound."""


class Flavor(enum.Enum):
    FULL = "full-truncated"
    BOOLEAN = "boolean"
    SYMMETRIC = "symmetric"


FLAVOR_OF_ENSEMBLE = {
    Ensemble.FREE_CIRCULAR: Flavor.FULL,
    Ensemble.BOOLEAN_BERNOULLI: Flavor.BOOLEAN,
    Ensemble.CLASSICAL_GAUSSIAN: Flavor.SYMMETRIC,
}


# -- Gram realization --------------------------------------------------------

@lru_cache(maxsize=None)
def _sum_of_squares(n: int) -> tuple[int, ...]:
    """Fewest integers whose squares sum to ``n`` (at most four)."""
    if n == 0:
        return ()
    r = math.isqrt(n)
    if r * r == n:
        return (r,)
    for a in range(r, 0, -1):
        rest = n - a * a
        b = math.isqrt(rest)
        if b * b == rest:
            return (a, b)
    for k in (3, 4):
        for a in range(r, 0, -1):
            sub = _sum_of_squares_exact(n - a * a, k - 1)
            if sub is not None:
                return (a,) + sub
    raise AssertionError("Lagrange four-square theorem violated")


def _sum_of_squares_exact(n: int, k: int):
    if k == 1:
        r = math.isqrt(n)
        return (r,) if r * r == n and n > 0 else None
    for a in range(math.isqrt(n), 0, -1):
        sub = _sum_of_squares_exact(n - a * a, k - 1)
        if sub is not None:
            return (a,) + sub
    return None


def rational_square_roots(q: Fraction) -> tuple[Fraction, ...]:
    """Rationals ``s_t`` with ``sum s_t**2 == q`` (``q >= 0``)."""
    q = Fraction(q)
    if q < 0:
        raise RealizationError(f"negative pivot {q}")
    return tuple(Fraction(a, q.denominator) for a in _sum_of_squares(q.numerator * q.denominator))


@lru_cache(maxsize=None)
def realize_gram(gram: tuple[tuple[Scalar, ...], ...]) -> tuple[tuple[Scalar, ...], ...]:
    """Coordinates ``V`` with ``gram[i][j] == sum_t conj(V[i][t]) * V[j][t]``.

    Uses an ``L D L*`` factorization of the transpose followed by writing each
    pivot of ``D`` as a sum of rational squares.
    """
    k = len(gram)
    h = [[gram[j][i] for j in range(k)] for i in range(k)]
    L = [[Fraction(0)] * k for _ in range(k)]
    D = [Fraction(0)] * k
    for j in range(k):
        s = h[j][j] - sum((L[j][t] * D[t] * conj(L[j][t]) for t in range(j)), Fraction(0))
        s = simplify(s)
        if isinstance(s, GaussianRational) or s < 0:
            raise RealizationError("Gram matrix is not positive semidefinite")
        D[j] = s
        L[j][j] = Fraction(1)
        for i in range(j + 1, k):
            v = h[i][j] - sum((L[i][t] * D[t] * conj(L[j][t]) for t in range(j)), Fraction(0))
            if s == 0:
                if v != 0:
                    raise RealizationError("Gram matrix is not positive semidefinite")
                L[i][j] = Fraction(0)
            else:
                L[i][j] = simplify(v / s)
    cols = []
    for j in range(k):
        for root in rational_square_roots(D[j]):
            cols.append((j, root))
    return tuple(tuple(simplify(L[i][j] * root) for j, root in cols) for i in range(k))


# -- fields and the Fock space ------------------------------------------------

@dataclass(frozen=True)
class Field:
    """``sum coeff * op(letter)`` with ``op`` creation (``True``) or annihilation."""

    terms: tuple[tuple[Scalar, bool, int], ...]

    def adjoint(self) -> Field:
        return Field(tuple((conj(c), not create, letter) for c, create, letter in self.terms))

    def __add__(self, other: Field) -> Field:
        return Field(self.terms + other.terms)


Word_ = tuple  # basis word: tuple of letter indices


class FockSpace:
    """A Fock space over a lazily grown alphabet of orthonormal letters.

    ``depth`` bounds the word length (full and symmetric flavors).  Basis words
    are materialized on demand; ``dimension`` is the formal size of the
    truncated space.
    """

    def __init__(self, flavor: Flavor, depth: int | None = None) -> None:
        if flavor is Flavor.BOOLEAN:
            depth = 1
        elif depth is None:
            raise ValueError("full and symmetric flavors need a depth")
        self.flavor = flavor
        self.depth = depth
        self.labels: list[Hashable] = []
        self._letter_index: dict[Hashable, int] = {}
        self._basis: dict[Word_, int] = {(): 0}
        self._words: list[Word_] = [()]

    def letter(self, label: Hashable) -> int:
        idx = self._letter_index.get(label)
        if idx is None:
            idx = self._letter_index[label] = len(self.labels)
            self.labels.append(label)
        return idx

    @property
    def num_letters(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        L, d = self.num_letters, self.depth
        if self.flavor is Flavor.BOOLEAN:
            return 1 + L
        if self.flavor is Flavor.FULL:
            return sum(L ** k for k in range(d + 1))
        return math.comb(L + d, d)

    @property
    def materialized(self) -> int:
        return len(self._words)

    def index(self, word: Word_) -> int:
        idx = self._basis.get(word)
        if idx is None:
            idx = self._basis[word] = len(self._words)
            self._words.append(word)
        return idx

    def word(self, index: int) -> Word_:
        return self._words[index]

    def enumerate_basis(self) -> list[Word_]:
        """Materialize the whole truncated basis (vacuum first)."""
        import itertools
        L = range(self.num_letters)
        if self.flavor is Flavor.BOOLEAN:
            words = [()] + [(a,) for a in L]
        elif self.flavor is Flavor.FULL:
            words = [w for k in range(self.depth + 1) for w in itertools.product(L, repeat=k)]
        else:
            words = [w for k in range(self.depth + 1) for w in itertools.combinations_with_replacement(L, k)]
        for w in words:
            self.index(w)
        return list(self._words)

    # elementary actions on basis words; ``None`` means the result is zero
    def create(self, letter: int, word: Word_):
        if self.flavor is Flavor.BOOLEAN:
            return (1, (letter,)) if not word else None
        if len(word) >= self.depth:
            return None
        if self.flavor is Flavor.FULL:
            return 1, (letter,) + word
        pos = bisect.bisect_left(word, letter)
        return 1, word[:pos] + (letter,) + word[pos:]

    def annihilate(self, letter: int, word: Word_):
        if not word:
            return None
        if self.flavor is Flavor.SYMMETRIC:
            c = word.count(letter)
            if not c:
                return None
            pos = word.index(letter)
            return c, word[:pos] + word[pos + 1:]
        if word[0] != letter:
            return None
        return 1, word[1:]

    def apply(self, field: Field, vector: dict, budget: int | None = None) -> dict:
        """``field`` applied to a sparse vector ``{word: coeff}``.

        Words longer than ``budget`` are dropped: with that many annihilations
        left they can no longer reach the vacuum.
        """
        out: dict = {}
        for word, c in vector.items():
            for coeff, create, letter in field.terms:
                res = self.create(letter, word) if create else self.annihilate(letter, word)
                if res is None:
                    continue
                mult, new = res
                if budget is not None and len(new) > budget:
                    continue
                out[new] = out.get(new, 0) + c * coeff * mult
        return {w: v for w, v in out.items() if v}

    def operator(self, field: Field) -> OperatorRep:
        """Sparse matrix of ``field`` on the fully materialized basis."""
        basis = self.enumerate_basis()
        entries = {}
        for col, word in enumerate(basis):
            for new, v in self.apply(field, {word: Fraction(1)}).items():
                entries[(self.index(new), col)] = v
        return OperatorRep(len(basis), entries, self.weights())

    def weights(self) -> tuple[int, ...] | None:
        """Squared norms of the materialized basis words (``None`` if orthonormal)."""
        if self.flavor is not Flavor.SYMMETRIC:
            return None
        return tuple(math.prod(math.factorial(w.count(a)) for a in set(w)) for w in self._words)


class OperatorRep:
    """Exact sparse square matrix; basis element 0 is the vacuum.

    ``weights`` are the squared norms of the (orthogonal) basis vectors; ``None``
    means orthonormal.  The symmetric flavor needs them because its monomial
    basis has ``||w||^2 = prod(multiplicity!)``.
    """

    def __init__(self, dim: int, entries: dict[tuple[int, int], Scalar] | None = None,
                 weights: tuple[int, ...] | None = None) -> None:
        self.dim = dim
        self.entries = {k: simplify(v) for k, v in (entries or {}).items() if v}
        self.weights = weights

    @classmethod
    def identity(cls, dim: int) -> OperatorRep:
        return cls(dim, {(i, i): Fraction(1) for i in range(dim)})

    def __getitem__(self, key: tuple[int, int]) -> Scalar:
        return self.entries.get(key, Fraction(0))

    def __add__(self, other: OperatorRep) -> OperatorRep:
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0) + v
        return OperatorRep(self.dim, out, self.weights)

    def scale(self, c: Scalar) -> OperatorRep:
        return OperatorRep(self.dim, {k: v * c for k, v in self.entries.items()}, self.weights)

    def __matmul__(self, other: OperatorRep) -> OperatorRep:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        rows_of: dict[int, list] = {}
        for (i, k), v in other.entries.items():
            rows_of.setdefault(i, []).append((k, v))
        out: dict = {}
        for (i, j), a in self.entries.items():
            for k, b in rows_of.get(j, ()):
                out[(i, k)] = out.get((i, k), 0) + a * b
        return OperatorRep(self.dim, out, self.weights)

    def adjoint(self) -> OperatorRep:
        w = self.weights
        if w is None:
            return OperatorRep(self.dim, {(j, i): conj(v) for (i, j), v in self.entries.items()})
        return OperatorRep(self.dim, {(j, i): conj(v) * Fraction(w[i], w[j])
                                      for (i, j), v in self.entries.items()}, w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorRep):
            return NotImplemented
        return self.dim == other.dim and self.entries == other.entries

    def is_self_adjoint(self) -> bool:
        return self == self.adjoint()


def vacuum_expectation(op: OperatorRep) -> Scalar:
    """``<Omega, op Omega>``."""
    return op[(0, 0)]


# -- entry matrices ------------------------------------------------------------

def _label_prefix(ensemble: Ensemble) -> str:
    return ensemble.symbol


def entry_field(space: FockSpace, coords: Sequence[Scalar], ensemble: Ensemble, i: int, j: int) -> Field:
    """Unscaled entry ``(i, j)``: creation on slot ``(i, j)``, annihilation on slot ``(j, i)``."""
    p = _label_prefix(ensemble)
    terms = []
    for t, v in enumerate(coords):
        if v:
            terms.append((v, True, space.letter((p, i, j, t))))
            terms.append((conj(v), False, space.letter((p, j, i, t))))
    return Field(tuple(terms))


def scalar_field(space: FockSpace, coords: Sequence[Scalar], tag: Hashable = "x") -> Field:
    """A single field variable ``s(f)`` (no matrix structure)."""
    terms = []
    for t, v in enumerate(coords):
        if v:
            terms.append((v, True, space.letter((tag, t))))
            terms.append((conj(v), False, space.letter((tag, t))))
    return Field(tuple(terms))


@dataclass
class EntryMatrixRep:
    """An ``N x N`` matrix of unscaled entry fields.

    Each entry carries an implicit factor ``N**(-1/2)``; products of ``k``
    entries are rescaled by ``N**(-k/2)`` when evaluated.
    """

    N: int
    space: FockSpace
    fields: list[list[Field]]

    def entry(self, i: int, j: int) -> OperatorRep:
        return self.space.operator(self.fields[i][j])

    def flatten(self) -> OperatorRep:
        """One exact matrix of dimension ``N * dim`` with block ``(i, j)`` the entry operator."""
        blocks = [[self.entry(i, j) for j in range(self.N)] for i in range(self.N)]
        dim = self.space.materialized
        entries = {}
        for i in range(self.N):
            for j in range(self.N):
                for (a, b), v in blocks[i][j].entries.items():
                    entries[(i * dim + a, j * dim + b)] = v
        w = self.space.weights()
        return OperatorRep(self.N * dim, entries, None if w is None else w * self.N)

    def is_self_adjoint(self) -> bool:
        return self.flatten().is_self_adjoint()


def _build_matrix(N: int, vector: int, gram: GramSpace, space: FockSpace, ensemble: Ensemble) -> EntryMatrixRep:
    coords = realize_gram(gram.gram)[vector]
    fields = [[entry_field(space, coords, ensemble, i, j) for j in range(N)] for i in range(N)]
    return EntryMatrixRep(N, space, fields)


def build_semicircular_matrix(N: int, vector: int, gram: GramSpace, space: FockSpace) -> EntryMatrixRep:
    """``S_N(f)`` on a full Fock space."""
    if space.flavor is not Flavor.FULL:
        raise ValueError("semicircular matrices live on the full Fock space")
    return _build_matrix(N, vector, gram, space, Ensemble.FREE_CIRCULAR)


def build_bernoulli_matrix(N: int, vector: int, gram: GramSpace, space: FockSpace) -> EntryMatrixRep:
    """``B_N(f)`` on the Boolean Fock space."""
    if space.flavor is not Flavor.BOOLEAN:
        raise ValueError("Bernoulli matrices live on the Boolean Fock space")
    return _build_matrix(N, vector, gram, space, Ensemble.BOOLEAN_BERNOULLI)


def build_gaussian_matrix(N: int, vector: int, gram: GramSpace, space: FockSpace) -> EntryMatrixRep:
    """``G_N(f)`` on the symmetric (polynomial) Fock space."""
    if space.flavor is not Flavor.SYMMETRIC:
        raise ValueError("Gaussian matrices live on the symmetric Fock space")
    return _build_matrix(N, vector, gram, space, Ensemble.CLASSICAL_GAUSSIAN)


def entry_moment(entries: Sequence[tuple[EntryMatrixRep, int, int]]) -> Scalar:
    """``phi`` of a product of scaled entries ``x_{i1 j1} x_{i2 j2} ...`` (left to right)."""
    if not entries:
        return Fraction(1)
    space = entries[0][0].space
    vec = {(): Fraction(1)}
    for t in range(len(entries) - 1, -1, -1):
        rep, i, j = entries[t]
        vec = space.apply(rep.fields[i][j], vec, budget=t)
    k = len(entries)
    if k % 2:
        return Fraction(0)
    return simplify(vec.get((), Fraction(0)) * Fraction(1, entries[0][0].N) ** (k // 2))


def field_moment(gram: GramSpace, word: Sequence[int], flavor: Flavor) -> Scalar:
    """Vacuum expectation of ``s(f_{w1}) ... s(f_{wn})`` for single field variables."""
    return field_moments(gram, [tuple(word)], flavor)[tuple(word)]


def field_moments(gram: GramSpace, words: Iterable[Sequence[int]], flavor: Flavor) -> dict[tuple, Scalar]:
    """Vacuum expectations for many words at once.

    Words are applied right to left, so the vectors ``s(f_{w_t}) ... s(f_{w_n}) Omega``
    are shared between words with a common suffix.
    """
    words = [tuple(w) for w in words]
    longest = max(map(len, words), default=0)
    coords = realize_gram(gram.gram)
    space = FockSpace(flavor, depth=max(1, (longest + 1) // 2) if flavor is not Flavor.BOOLEAN else None)
    fields = [scalar_field(space, c) for c in coords]
    cache: dict[tuple, dict] = {(): {(): Fraction(1)}}

    def state(suffix: tuple) -> dict:
        # components longer than the letters still to come cannot return to the vacuum
        vec = cache.get(suffix)
        if vec is None:
            vec = space.apply(fields[suffix[0]], state(suffix[1:]), budget=longest - len(suffix))
            cache[suffix] = vec
        return vec

    out = {}
    for w in sorted(set(words), key=len):
        out[w] = simplify(state(w).get((), Fraction(0)))
    return out


# -- trace expressions ---------------------------------------------------------

def exactness_threshold(expr: TraceExpression) -> int:
    """Smallest depth at which truncation cannot clip any vacuum-to-vacuum path."""
    return expr.max_random_letters // 2


class _Evaluator:
    """Applies trace products to sparse states ``{(row, word, k): coeff}``."""

    def __init__(self, expr: TraceExpression, N: int, space: FockSpace, max_dimension: int) -> None:
        if N % expr.d0:
            raise ValueError(f"N={N} is not a multiple of d0={expr.d0}")
        self.expr = expr
        self.N = N
        self.space = space
        self.max_dimension = max_dimension
        self.coords = realize_gram(expr.gram.gram) if expr.ensemble is not None else ()
        self._fields: dict = {}
        self._consts: dict = {}
        self.seen_words: set = {()}

    def field(self, letter: RandomLetter, i: int, j: int) -> Field:
        key = (letter.vector, i, j)
        f = self._fields.get(key)
        if f is None:
            f = self._fields[key] = entry_field(self.space, self.coords[letter.vector], letter.ensemble, i, j)
        return f

    def columns(self, name: str):
        cols = self._consts.get(name)
        if cols is None:
            mat = self.expr.constants[name].realize(self.N)
            cols = [[(a, mat[a][b]) for a in range(self.N) if mat[a][b]] for b in range(self.N)]
            self._consts[name] = cols
        return cols

    def _record(self, states: dict) -> dict:
        for (_, w, _) in states:
            if w not in self.seen_words:
                self.seen_words.add(w)
                if len(self.seen_words) > self.max_dimension:
                    raise DimensionError(f"Fock basis exceeded {self.max_dimension} states")
        return states

    def apply_word(self, word: Word, states: dict, budget: int) -> dict:
        """``W`` acting on matrix-valued states; ``budget`` counts random letters still to the left."""
        for t in range(len(word) - 1, -1, -1):
            if not states:
                return states
            left = budget + max_random_letters(word[:t])
            states = self.apply_letter(word[t], states, left)
        return states

    def apply_letter(self, letter, states: dict, budget: int) -> dict:
        out: dict = {}
        if isinstance(letter, RandomLetter):
            space = self.space
            for (b, w, k), c in states.items():
                for a in range(self.N):
                    for coeff, create, lt in self.field(letter, a, b).terms:
                        res = space.create(lt, w) if create else space.annihilate(lt, w)
                        if res is None:
                            continue
                        mult, new = res
                        if len(new) > budget:
                            continue
                        key = (a, new, k + 1)
                        out[key] = out.get(key, 0) + c * coeff * mult
        elif isinstance(letter, ConstantLetter):
            cols = self.columns(letter.name)
            for (b, w, k), c in states.items():
                for a, v in cols[b]:
                    key = (a, w, k)
                    out[key] = out.get(key, 0) + c * v
        elif isinstance(letter, Centered):
            out = self.apply_word(letter.word, states, budget)
            by_row: dict[int, dict] = {}
            for (a, w, k), c in states.items():
                by_row.setdefault(a, {})[(w, k)] = c
            inv = Fraction(1, self.N)
            for a, fock in by_row.items():
                for (w, k), c in self.apply_trace(letter.word, fock, budget).items():
                    key = (a, w, k)
                    out[key] = out.get(key, 0) - inv * c
        elif isinstance(letter, Combination):
            for coeff, w in letter.terms:
                if not coeff:
                    continue
                for key, c in self.apply_word(w, states, budget).items():
                    out[key] = out.get(key, 0) + coeff * c
        else:
            raise TypeError(f"unknown letter {letter!r}")
        return self._record({key: v for key, v in out.items() if v})

    def apply_trace(self, word: Word, fock: dict, budget: int) -> dict:
        """``Tr(W)`` acting on a Fock vector ``{(word, k): coeff}``."""
        out: dict = {}
        for i in range(self.N):
            states = {(i, w, k): c for (w, k), c in fock.items()}
            for (a, w, k), c in self.apply_word(word, states, budget).items():
                if a == i:
                    out[(w, k)] = out.get((w, k), 0) + c
        return {key: v for key, v in out.items() if v}

    def moment(self) -> Scalar:
        words = self.expr.words
        fock = {((), 0): Fraction(1)}
        for idx in range(len(words) - 1, -1, -1):
            budget = sum(max_random_letters(w) for w in words[:idx])
            fock = self.apply_trace(words[idx], fock, budget)
        total: Scalar = Fraction(0)
        for (w, k), c in fock.items():
            if w == () and k % 2 == 0:
                total = total + c * Fraction(1, self.N) ** (k // 2)
        return simplify(total)


def oracle_moment(expr: TraceExpression, N: int, depth: int | None = None,
                  max_dimension: int = DEFAULT_MAX_DIMENSION, stats: dict | None = None) -> Scalar:
    """``phi(Tr(W_1)...Tr(W_r))`` at dimension ``N`` from an explicit Fock realization.

    ``depth`` defaults to the exactness threshold; a smaller value raises
    :class:`ExactnessError`.  ``stats`` (if given) receives the materialized
    basis size and the formal dimension.
    """
    need = exactness_threshold(expr)
    if depth is None:
        depth = max(need, 1)
    if depth < need:
        raise ExactnessError(f"depth {depth} < {need}: truncation could clip Wick paths")
    flavor = FLAVOR_OF_ENSEMBLE.get(expr.ensemble, Flavor.FULL)
    space = FockSpace(flavor, depth=depth if flavor is not Flavor.BOOLEAN else None)
    ev = _Evaluator(expr, N, space, max_dimension)
    value = ev.moment()
    if stats is not None:
        stats["materialized"] = len(ev.seen_words)
        stats["letters"] = space.num_letters
        stats["formal_dimension"] = space.dimension
    return value


def oracle_moment_functional(expr: TraceExpression, N: int, **kwargs):
    """Moments of sub-products of ``expr``'s trace factors, evaluated by the oracle at ``N``."""
    from .cumulants import MomentFunctional
    return MomentFunctional(lambda tags: oracle_moment(expr.sub(tags), N, **kwargs))


def oracle_cumulant(kind, expr: TraceExpression, N: int, **kwargs) -> Scalar:
    """Cumulant of the trace factors at a fixed ``N`` with oracle moments."""
    from .cumulants import cumulant_from_moments
    return cumulant_from_moments(kind, oracle_moment_functional(expr, N, **kwargs), tuple(range(expr.r)))
