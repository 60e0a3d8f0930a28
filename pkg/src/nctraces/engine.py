"""Exact moments and cumulants of traces of random matrix words.

Every trace product is expanded into entry products.  Each entry letter has a
row and a column index variable; a trace closes its word into a cycle.  For a
pairing of the random letters, the covariance

    phi(x_ij(f) x_kl(g)) = <f, g> / N * delta_il * delta_jk

glues index variables together.  Every resulting class carries exactly one
constant "column end" and one constant "row end" or none at all, so the sum
over indices is ``N`` per constant-free class times ``Tr_tau`` of the constants
along the induced permutation ``tau``.  With block-inflated constants each cycle
of ``tau`` is ``N * tr(product)``, which makes the answer a Laurent polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterator, Sequence

from .cumulants import CumulantKind, MomentFunctional, cumulant_from_moments
from .expressions import (
    Centered,
    Combination,
    ConstantLetter,
    ConstantProfile,
    Ensemble,
    ExpressionError,
    RandomLetter,
    TraceExpression,
    Word,
)
from .npoly import NPolynomial, leading_term
from .partitions import (
    Permutation,
    SetPartition,
    as_partition,
    enumerate_noncrossing_pairings,
    enumerate_pair_partitions,
    interval_pairing,
    join,
)
from .scalars import Scalar, simplify

KIND_OF_ENSEMBLE = {
    Ensemble.FREE_CIRCULAR: CumulantKind.FREE,
    Ensemble.BOOLEAN_BERNOULLI: CumulantKind.BOOLEAN,
    Ensemble.CLASSICAL_GAUSSIAN: CumulantKind.CLASSICAL,
}


class EngineError(ValueError):
    """Cumulant kind does not match the ensemble, or a similar misuse."""


@dataclass(frozen=True)
class FlatTerm:
    """One term of the entry expansion of a trace product.

    ``random`` lists ``(vector, row, col)`` in product order, ``constants`` lists
    ``(name, row, col)``.  The term's value is ``coeff * N**npow`` times the
    state of the entry product.
    """

    coeff: Scalar
    npow: int
    random: tuple[tuple[int, int, int], ...]
    constants: tuple[tuple[str, int, int], ...]
    nvars: int


@dataclass
class _Builder:
    coeff: Scalar
    npow: int
    random: tuple
    constants: tuple
    nvars: int
    links: tuple

    def new_var(self) -> tuple[_Builder, int]:
        return _Builder(self.coeff, self.npow, self.random, self.constants, self.nvars + 1, self.links), self.nvars


def _expand_path(word: Word, start: int, b: _Builder, profiles) -> Iterator[tuple[_Builder, int]]:
    if not word:
        yield b, start
        return
    letter, rest = word[0], word[1:]
    if isinstance(letter, RandomLetter):
        b2, v = b.new_var()
        b2.random = b2.random + ((letter.vector, start, v),)
        yield from _expand_path(rest, v, b2, profiles)
    elif isinstance(letter, ConstantLetter):
        if profiles[letter.name].is_identity:
            yield from _expand_path(rest, start, b, profiles)
            return
        b2, v = b.new_var()
        b2.constants = b2.constants + ((letter.name, start, v),)
        yield from _expand_path(rest, v, b2, profiles)
    elif isinstance(letter, Centered):
        for b2, end in _expand_path(letter.word, start, b, profiles):
            yield from _expand_path(rest, end, b2, profiles)
        # the random scalar tr(W) sits here in product order; the matrix part is I
        b3 = _Builder(-b.coeff, b.npow - 1, b.random, b.constants, b.nvars, b.links)
        for b4 in _close(letter.word, b3, profiles):
            yield from _expand_path(rest, start, b4, profiles)
    elif isinstance(letter, Combination):
        for c, w in letter.terms:
            if not c:
                continue
            b2 = _Builder(b.coeff * c, b.npow, b.random, b.constants, b.nvars, b.links)
            for b3, end in _expand_path(w, start, b2, profiles):
                yield from _expand_path(rest, end, b3, profiles)
    else:
        raise ExpressionError(f"unknown letter {letter!r}")


def _close(word: Word, b: _Builder, profiles) -> Iterator[_Builder]:
    b2, v0 = b.new_var()
    for b3, end in _expand_path(word, v0, b2, profiles):
        if end != v0:
            b3 = _Builder(b3.coeff, b3.npow, b3.random, b3.constants, b3.nvars, b3.links + ((end, v0),))
        yield b3


def flatten(expr: TraceExpression) -> list[FlatTerm]:
    """Entry expansion of ``Tr(W_1)...Tr(W_r)`` into :class:`FlatTerm` objects."""
    partials = [_Builder(Fraction(1), 0, (), (), 0, ())]
    for w in expr.words:
        partials = [b2 for b in partials for b2 in _close(w, b, expr.constants)]
    out = []
    for b in partials:
        # merge linked variables and renumber densely
        parent = list(range(b.nvars))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, c in b.links:
            parent[find(a)] = find(c)
        relabel: dict[int, int] = {}
        for v in range(b.nvars):
            relabel.setdefault(find(v), len(relabel))
        r = lambda v: relabel[find(v)]
        out.append(FlatTerm(
            simplify(b.coeff), b.npow,
            tuple((f, r(i), r(j)) for f, i, j in b.random),
            tuple((n, r(i), r(j)) for n, i, j in b.constants),
            len(relabel),
        ))
    return out


def pairings_for(ensemble: Ensemble | None, m: int) -> list[SetPartition]:
    """The Wick pairing class of the ensemble on ``m`` ordered letters."""
    if m == 0:
        return [SetPartition._trusted(0, ())]
    if m % 2:
        return []
    if ensemble is Ensemble.FREE_CIRCULAR:
        return enumerate_noncrossing_pairings(m)
    if ensemble is Ensemble.CLASSICAL_GAUSSIAN:
        return enumerate_pair_partitions(m)
    if ensemble is Ensemble.BOOLEAN_BERNOULLI:
        return [interval_pairing(m)]
    raise EngineError(f"no pairing class for {ensemble!r}")


class _ConstantTraces:
    """Cache of normalized traces of cyclic products of constant profiles."""

    def __init__(self, profiles) -> None:
        self.profiles = profiles
        self.cache: dict[tuple[str, ...], Scalar] = {}
        self.padded: dict[str, tuple] = {}

    def _matrix(self, name: str, d: int):
        key = (name, d)
        if key not in self.padded:
            self.padded[key] = self.profiles[name].padded(d).matrix
        return self.padded[key]

    def tr(self, names: tuple[str, ...]) -> Scalar:
        k = min(range(len(names)), key=lambda i: names[i:] + names[:i])
        key = names[k:] + names[:k]
        if key not in self.cache:
            d = math.lcm(*(self.profiles[n].d0 for n in key))
            mats = [self._matrix(n, d) for n in key]
            prod = reduce(lambda a, b: [[sum((a[i][t] * b[t][j] for t in range(d)), Fraction(0))
                                         for j in range(d)] for i in range(d)], mats)
            self.cache[key] = simplify(sum((prod[i][i] for i in range(d)), Fraction(0)) / d)
        return self.cache[key]


def _evaluate_pairing(term: FlatTerm, pairing: SetPartition, gram, traces: _ConstantTraces):
    """``(coefficient, power of N)`` of one pairing of one flat term, or ``None`` when zero."""
    weight: Scalar = term.coeff
    rnd = term.random
    for p, q in pairing.blocks:
        w = gram[rnd[p - 1][0]][rnd[q - 1][0]]
        if not w:
            return None
        weight = weight * w
    parent = list(range(term.nvars))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in pairing.blocks:
        _, rp, cp = rnd[p - 1]
        _, rq, cq = rnd[q - 1]
        parent[find(rp)] = find(cq)
        parent[find(cp)] = find(rq)
    power = term.npow - len(rnd) // 2
    row_owner: dict[int, int] = {}
    touched = set()
    for idx, (_, row, col) in enumerate(term.constants):
        row_owner[find(row)] = idx
        touched.add(find(row))
        touched.add(find(col))
    roots = {find(v) for v in range(term.nvars)}
    power += len(roots - touched)
    # tau(c) = constant whose row class is the column class of c
    seen = [False] * len(term.constants)
    for start in range(len(term.constants)):
        if seen[start]:
            continue
        names = []
        c = start
        while not seen[c]:
            seen[c] = True
            names.append(term.constants[c][0])
            c = row_owner[find(term.constants[c][2])]
        t = traces.tr(tuple(names))
        if not t:
            return None
        weight = weight * t
        power += 1
    return weight, power


def moment_of_traces(expr: TraceExpression) -> NPolynomial:
    """``phi(Tr(W_1) ... Tr(W_r))`` as an exact Laurent polynomial in ``N``."""
    gram = expr.gram.gram
    traces = _ConstantTraces(expr.constants)
    acc: dict[int, Scalar] = {}
    for term in flatten(expr):
        m = len(term.random)
        if m % 2:
            continue
        for pairing in pairings_for(expr.ensemble, m):
            res = _evaluate_pairing(term, pairing, gram, traces)
            if res is None:
                continue
            w, k = res
            acc[k] = acc.get(k, 0) + w
    return NPolynomial(acc)


def evaluate_at(expr: TraceExpression, n: int) -> Scalar:
    """The moment at a concrete dimension (a multiple of the profile dimension)."""
    if n % expr.d0:
        raise ExpressionError(f"N={n} is not a multiple of d0={expr.d0}")
    return moment_of_traces(expr).evaluate(n)


def trace_moment_functional(expr: TraceExpression) -> MomentFunctional:
    """Moments of sub-products of the trace factors, keyed by factor index."""
    return MomentFunctional(lambda tags: moment_of_traces(expr.sub(tags)))


def _check_kind(kind: CumulantKind, expr: TraceExpression) -> None:
    if expr.ensemble is not None and KIND_OF_ENSEMBLE[expr.ensemble] is not kind:
        raise EngineError(f"{kind.value} cumulants do not match the {expr.ensemble.value} ensemble")


def cumulant_of_traces(kind: CumulantKind, expr: TraceExpression,
                       functional: MomentFunctional | None = None) -> NPolynomial:
    """``k_r``, ``kappa_r`` or ``b_r`` of ``(Tr W_1, ..., Tr W_r)`` via lattice inversion."""
    _check_kind(kind, expr)
    m = functional or trace_moment_functional(expr)
    return cumulant_from_moments(kind, m, tuple(range(expr.r)))


def default_kind(expr: TraceExpression) -> CumulantKind:
    if expr.ensemble is None:
        return CumulantKind.FREE
    return KIND_OF_ENSEMBLE[expr.ensemble]


def connected_pairing_cumulant(expr: TraceExpression) -> NPolynomial:
    """Free cumulant of pure semicircular words as a sum over connected non-crossing pairings.

    Sums ``N^(#(gamma sigma) - m/2)`` times Gram products over ``sigma`` in
    ``NC_2(m)`` with ``sigma v gamma = 1_m``, where ``gamma`` has one cycle per word.
    """
    vectors = []
    cycles = []
    for w in expr.words:
        if not all(isinstance(l, RandomLetter) and l.ensemble is Ensemble.FREE_CIRCULAR for l in w):
            raise EngineError("connected pairing sums need words of semicircular letters only")
        cycles.append(list(range(len(vectors) + 1, len(vectors) + len(w) + 1)))
        vectors.extend(l.vector for l in w)
    m = len(vectors)
    if m % 2:
        return NPolynomial()
    gamma = Permutation.from_cycles(cycles, m)
    gamma_part = as_partition(gamma)
    one = SetPartition.one(m)
    gram = expr.gram.gram
    acc: dict[int, Scalar] = {}
    for sigma in enumerate_noncrossing_pairings(m):
        weight: Scalar = Fraction(1)
        for p, q in sigma.blocks:
            weight = weight * gram[vectors[p - 1]][vectors[q - 1]]
        if not weight or join(sigma, gamma_part) != one:
            continue
        s = Permutation.from_cycles(sigma.blocks, m)
        k = (gamma * s).num_cycles() - m // 2
        acc[k] = acc.get(k, 0) + weight
    return NPolynomial(acc)


def first_order_limit(word: Word, gram, constants=None) -> Scalar:
    """``lim tr (x) phi(W)``: the coefficient of ``N`` in ``phi(Tr W)``."""
    poly = moment_of_traces(TraceExpression((tuple(word),), gram, constants or {}))
    if poly.degree > 1:
        raise EngineError(f"phi(Tr W) grows like N^{poly.degree}; no finite first-order limit")
    return poly.coeff(1)


def asymptotic_freeness_check(factors: Sequence[Word], gram, constants=None) -> Scalar:
    """First-order limit of the product of the given (centered, alternating) factors."""
    word = tuple(letter for f in factors for letter in f)
    return first_order_limit(word, gram, constants)


@dataclass(frozen=True)
class ScalingRecord:
    case: str
    polynomial: NPolynomial
    degree: int | float
    bound: int
    passed: bool


def scaling_record(expr: TraceExpression, kind: CumulantKind | None = None, label: str = "") -> ScalingRecord:
    kind = kind or default_kind(expr)
    poly = cumulant_of_traces(kind, expr)
    degree, _ = leading_term(poly)
    bound = 2 - expr.r
    return ScalingRecord(label or str(expr), poly, degree, bound, degree <= bound)


def vanishing_higher_cumulants_report(cases: Sequence[TraceExpression]) -> list[ScalingRecord]:
    """Degree of the matching cumulant against the bound ``2 - r`` for each case."""
    return [scaling_record(expr) for expr in cases]
