"""Structural checks assembled from the engine and the Fock oracle.

* the second-order covariance product formula for centered semicircular
  powers sandwiched between centered-or-identity constants;
* the monotone-independence identities between constants and the algebra
  generated by ``B(f) A B(g)``, with the product formula for such words and
  the ``tr(A)`` versus ``tr(D)`` reading of the sandwich identity;
* the ``property_star`` aggregate of first-order freeness, the covariance
  formula and degree bounds for higher cumulants.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cumulants import CumulantKind
from .engine import (
    ScalingRecord,
    asymptotic_freeness_check,
    cumulant_of_traces,
    first_order_limit,
    moment_of_traces,
    scaling_record,
)
from .expressions import (
    B,
    C,
    Combination,
    ConstantProfile,
    S,
    TraceExpression,
    Word,
    shifted,
)
from .fock import oracle_moment
from .npoly import NPolynomial
from .scalars import Scalar, simplify
from .wick import GramSpace


class HypothesisViolation(ValueError):
    """Inputs fall outside the hypotheses of the identity being checked."""


# -- second-order covariance formula ---------------------------------------------

def centered_semicircular_power(vector: int, power: int, gram: GramSpace) -> Combination:
    """``S(f)^k - c I`` with ``c = lim tr(S(f)^k)``, the deterministic centering."""
    word = (S(vector),) * power
    return shifted(word, first_order_limit(word, gram))


def _normalized_trace_product(a: ConstantProfile, b: ConstantProfile) -> Scalar:
    d = math.lcm(a.d0, b.d0)
    x, y = a.padded(d).matrix, b.padded(d).matrix
    total = sum((x[i][j] * y[j][i] for i in range(d) for j in range(d)), Fraction(0))
    return simplify(total / d)


def _check_hypotheses(consts: Sequence[ConstantProfile], words: Sequence[tuple[int, int]], side: str,
                      gram: GramSpace) -> None:
    if len(consts) != len(words):
        raise HypothesisViolation(f"{side}: one constant per centered power required")
    for c in consts:
        if not (c.is_identity or c.is_centered):
            raise HypothesisViolation(f"{side}: constant {c.name!r} is neither centered nor the identity")
    for k in range(len(words) - 1):
        # for an orthonormal family this is the 'equal vectors' condition
        if consts[k].is_identity and gram.inner(words[k][0], words[k + 1][0]) != 0:
            raise HypothesisViolation(
                f"{side}: identity constant between non-orthogonal vectors at positions {k + 1}, {k + 2}")
    for v, p in words:
        if p < 1:
            raise HypothesisViolation(f"{side}: powers must be positive")


@dataclass(frozen=True)
class CovarianceResult:
    lhs: NPolynomial
    rhs: NPolynomial
    equal: bool


def covariance_expression(A: Sequence[ConstantProfile], p_words: Sequence[tuple[int, int]],
                          B_: Sequence[ConstantProfile], q_words: Sequence[tuple[int, int]],
                          gram: GramSpace) -> TraceExpression:
    """``Tr(A_n P_n ... A_1 P_1) Tr(Q_1 B_1 ... Q_m B_m)``."""
    consts = {c.name: c for c in list(A) + list(B_)}
    left: list = []
    for a, (v, k) in reversed(list(zip(A, p_words))):
        left += [C(a.name), centered_semicircular_power(v, k, gram)]
    right: list = []
    for b, (v, k) in zip(B_, q_words):
        right += [centered_semicircular_power(v, k, gram), C(b.name)]
    return TraceExpression((tuple(left), tuple(right)), gram, consts)


def second_order_covariance_check(A: Sequence[ConstantProfile], p_words: Sequence[tuple[int, int]],
                                  B_: Sequence[ConstantProfile], q_words: Sequence[tuple[int, int]],
                                  gram: GramSpace) -> CovarianceResult:
    """Compare ``kappa_2`` of the two traces with ``delta_{n,m} prod tr(A_k B_k) tr(P_k Q_k)``.

    ``p_words``/``q_words`` are ``(vector, power)`` pairs; ``tr(P_k Q_k)`` is
    ``phi(Tr(P_k Q_k)) / N``.  ``equal`` is exact polynomial equality.
    """
    _check_hypotheses(A, p_words, "left", gram)
    _check_hypotheses(B_, q_words, "right", gram)
    profiles = {}
    for c in list(A) + list(B_):
        if profiles.setdefault(c.name, c) != c:
            raise HypothesisViolation(f"constant name {c.name!r} used for two different matrices")
    expr = covariance_expression(A, p_words, B_, q_words, gram)
    lhs = cumulant_of_traces(CumulantKind.FREE, expr)
    if len(A) != len(B_):
        rhs = NPolynomial()
    else:
        rhs = NPolynomial.constant(1)
        for a, b, (vp, kp), (vq, kq) in zip(A, B_, p_words, q_words):
            pq = (centered_semicircular_power(vp, kp, gram), centered_semicircular_power(vq, kq, gram))
            rhs = rhs * moment_of_traces(TraceExpression((pq,), gram, {})).shift(-1) * _normalized_trace_product(a, b)
    return CovarianceResult(lhs, rhs, lhs == rhs)


# -- monotone independence ---------------------------------------------------------

def tr_phi(word: Word, gram: GramSpace, constants, N: int) -> Scalar:
    """``(tr (x) phi)(W)`` at size ``N`` via the Fock oracle; the empty word is ``I``."""
    if not word:
        return Fraction(1)
    return simplify(oracle_moment(TraceExpression((tuple(word),), gram, constants), N) / N)


def tr_phi_engine(word: Word, gram: GramSpace, constants, N: int) -> Scalar:
    if not word:
        return Fraction(1)
    return simplify(moment_of_traces(TraceExpression((tuple(word),), gram, constants)).evaluate(N) / N)


@dataclass(frozen=True)
class MonotoneRecord:
    label: str
    identity: str
    lhs: Scalar
    rhs: Scalar
    holds: bool
    engine_agrees: bool


@dataclass(frozen=True)
class Arbitration:
    label: str
    lhs: Scalar
    rhs_tr_a: Scalar
    rhs_tr_d: Scalar

    @property
    def tr_a_holds(self) -> bool:
        return self.lhs == self.rhs_tr_a

    @property
    def tr_d_holds(self) -> bool:
        return self.lhs == self.rhs_tr_d


@dataclass
class MonotoneReport:
    N: int
    records: list[MonotoneRecord] = field(default_factory=list)
    arbitration: list[Arbitration] = field(default_factory=list)
    # outside the generated algebra: x1 = x2 = B(f); informational only
    scope_note: MonotoneRecord | None = None

    @property
    def passed(self) -> bool:
        return all(r.holds and r.engine_agrees for r in self.records)

    @property
    def verdict(self) -> str:
        """Which reading of the sandwich identity survived every instance."""
        a = all(x.tr_a_holds for x in self.arbitration)
        d = all(x.tr_d_holds for x in self.arbitration)
        if d and not a:
            return "tr(D)"
        if a and not d:
            return "tr(A)"
        return "both" if a else "neither"


def _random_constant(rng: random.Random, name: str, d: int) -> ConstantProfile:
    return ConstantProfile(name, tuple(tuple(Fraction(rng.randint(-2, 2)) for _ in range(d)) for _ in range(d)))


class _InstanceFactory:
    def __init__(self, gram: GramSpace, N: int, seed: int) -> None:
        self.gram = gram
        self.N = N
        self.rng = random.Random(seed)
        self.constants: dict[str, ConstantProfile] = {}

    def constant(self, matrix=None) -> str:
        name = f"K{len(self.constants)}"
        if matrix is None:
            prof = _random_constant(self.rng, name, self.N)
        else:
            prof = ConstantProfile(name, matrix)
        self.constants[name] = prof
        return name

    def vector(self) -> int:
        return self.rng.randrange(self.gram.k)

    def b_block(self) -> Word:
        """``B(f) A B(g)``."""
        return (B(self.vector()), C(self.constant()), B(self.vector()))

    def a_element(self) -> Word:
        blocks = self.rng.choice((1, 1, 2))
        return sum((self.b_block() for _ in range(blocks)), ())

    def x_element(self) -> Word:
        """A short word in the algebra generated by constants and ``B(f) A B(g)``
        (possibly the identity); ``B(f) B(g)`` counts, with ``A = I``."""
        out: list = []
        for _ in range(self.rng.randint(0, 3)):
            r = self.rng.random()
            if r < 0.4:
                out.append(C(self.constant()))
            elif r < 0.7:
                out += [B(self.vector()), B(self.vector())]
            else:
                out += self.b_block()
        return tuple(out)


def product_formula_instance(fac: _InstanceFactory, m: int) -> tuple[Word, Scalar]:
    """``prod_k B(f_{2k-1}) A_k B(f_{2k})`` and ``prod_k tr(A_k) <f_{2k-1}, f_{2k}>``."""
    word: list = []
    rhs: Scalar = Fraction(1)
    for _ in range(m):
        u, v = fac.vector(), fac.vector()
        a = fac.constant()
        word += [B(u), C(a), B(v)]
        rhs = rhs * fac.constants[a].tr * fac.gram.inner(u, v)
    return tuple(word), simplify(rhs)


def monotone_suite(gram: GramSpace, N: int, instances: int = 8, seed: int = 0) -> MonotoneReport:
    """Exact oracle checks at size ``N`` with random constants of profile dimension ``N``.

    Each identity gets ``instances`` generated cases, as do the product formula
    (``m = 1, 2, 3`` cycled) and the ``tr(A)``/``tr(D)`` arbitration.
    """
    fac = _InstanceFactory(gram, N, seed + 1000 * N)
    report = MonotoneReport(N)
    consts = fac.constants

    def value(word):
        return tr_phi(word, gram, consts, N)

    def add(label, identity, lhs_word, rhs_words):
        lhs = value(lhs_word)
        rhs: Scalar = Fraction(1)
        for w in rhs_words:
            rhs = rhs * value(w)
        rhs = simplify(rhs)
        eng_l = tr_phi_engine(lhs_word, gram, consts, N)
        report.records.append(MonotoneRecord(label, identity, lhs, rhs, lhs == rhs, eng_l == lhs))

    for t in range(instances):
        x1, b1, a = fac.x_element(), (C(fac.constant()),), fac.a_element()
        add(f"left#{t}", "phi(x b a) = phi(x b) phi(a)", x1 + b1 + a, [x1 + b1, a])
        b2, x2, a = (C(fac.constant()),), fac.x_element(), fac.a_element()
        add(f"right#{t}", "phi(a b x) = phi(a) phi(b x)", a + b2 + x2, [a, b2 + x2])
        x1, b1, a, b2, x2 = fac.x_element(), (C(fac.constant()),), fac.a_element(), (C(fac.constant()),), fac.x_element()
        add(f"middle#{t}", "phi(x b a b' x') = phi(x b b' x') phi(a)", x1 + b1 + a + b2 + x2, [x1 + b1 + b2 + x2, a])

    for t in range(instances):
        word, rhs = product_formula_instance(fac, 1 + t % 3)
        lhs = value(word)
        report.records.append(MonotoneRecord(
            f"product#{t}", "tr(x)phi(prod B A B) = prod tr(A) <f, g>", lhs, rhs, lhs == rhs,
            tr_phi_engine(word, gram, consts, N) == lhs))

    f = 0
    one = fac.constant(tuple(tuple(Fraction(int(i == j)) for j in range(N)) for i in range(N)))
    e11 = fac.constant(tuple(tuple(Fraction(int(i == j == 0)) for j in range(N)) for i in range(N)))
    a = (B(f), C(one), B(f))
    lhs = value((B(f), C(e11)) + a + (C(e11), B(f)))
    rhs = simplify(value((B(f), C(e11), C(e11), B(f))) * value(a))
    report.scope_note = MonotoneRecord("odd-x", "phi(x b a b' x') with x = x' = B(f), b = b' = E11",
                                       lhs, rhs, lhs == rhs, True)

    zero = tuple(tuple(Fraction(0) for _ in range(N)) for _ in range(N))
    ident = tuple(tuple(Fraction(int(i == j)) for j in range(N)) for i in range(N))
    for t in range(instances):
        if t == 0:
            a, d, x = fac.constant(ident), fac.constant(zero), ()
            u = v = 0
        else:
            a, d, x = fac.constant(), fac.constant(), fac.x_element()
            u, v = fac.vector(), fac.vector()
        lhs = value((C(a), B(u), C(d), B(v)) + x)
        ax = value((C(a),) + x)
        base = gram.inner(u, v) * ax
        report.arbitration.append(Arbitration(
            f"sandwich#{t}", lhs, simplify(consts[a].tr * base), simplify(consts[d].tr * base)))
    return report


# -- property_star aggregate ------------------------------------------------------

@dataclass
class StarReport:
    freeness: list[tuple[str, Scalar, bool]] = field(default_factory=list)
    covariance: list[tuple[str, CovarianceResult | None, str]] = field(default_factory=list)
    scaling: list[ScalingRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (all(ok for _, _, ok in self.freeness)
                and all(r is None or r.equal for _, r, _ in self.covariance)
                and all(s.passed for s in self.scaling))


def property_star_report(freeness_cases: Sequence[tuple[str, Sequence[Word], GramSpace, dict]] = (),
                         covariance_cases: Sequence[tuple[str, tuple]] = (),
                         scaling_cases: Sequence[tuple[str, TraceExpression]] = ()) -> StarReport:
    """Aggregate the three parts; hypothesis violations are recorded as notices."""
    rep = StarReport()
    for label, factors, gram, consts in freeness_cases:
        val = asymptotic_freeness_check(factors, gram, consts)
        rep.freeness.append((label, val, val == 0))
    for label, args in covariance_cases:
        try:
            rep.covariance.append((label, second_order_covariance_check(*args), ""))
        except HypothesisViolation as exc:
            rep.covariance.append((label, None, str(exc)))
    for label, expr in scaling_cases:
        if expr.r < 3:
            raise HypothesisViolation("part (3) concerns r >= 3")
        rep.scaling.append(scaling_record(expr, label=label))
    return rep
