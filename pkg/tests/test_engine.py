import itertools
import random
from fractions import Fraction

import pytest

from nctraces.cumulants import CumulantKind
from nctraces.engine import (
    EngineError,
    asymptotic_freeness_check,
    connected_pairing_cumulant,
    cumulant_of_traces,
    first_order_limit,
    moment_of_traces,
    vanishing_higher_cumulants_report,
)
from nctraces.expressions import (
    B,
    C,
    Centered,
    Combination,
    ConstantProfile,
    ExpressionError,
    G,
    S,
    TraceExpression,
    centered_power,
    shifted,
)
from nctraces.npoly import NPolynomial

from brute import brute_moment, connected_nc2_bruteforce
from conftest import rand_gram

K = CumulantKind
ON1 = TraceExpression
g1 = __import__("nctraces").GramSpace.orthonormal(1)
g2 = __import__("nctraces").GramSpace.orthonormal(2)
A = ConstantProfile("A", ((1, 0), (0, -1)))
X = ConstantProfile("X", ((0, 1), (1, 0)))
Z = ConstantProfile("Z", ((1, 2), (3, -1)))
Id = ConstantProfile.identity("I")
CONSTS = {"A": A, "X": X, "Z": Z, "I": Id}
N_ = NPolynomial.monomial


def expr(*words, gram=g1, consts=CONSTS):
    return TraceExpression(tuple(words), gram, consts)


class TestMoments:
    def test_examples(self):
        assert moment_of_traces(expr((S(0),) * 2)) == N_(1)
        assert moment_of_traces(expr((S(0),) * 4)) == N_(1, 2)
        assert moment_of_traces(expr((G(0),) * 4)) == N_(1, 2) + N_(-1)
        for k in (1, 2, 3):
            assert moment_of_traces(expr((B(0),) * (2 * k))) == N_(1)

    def test_odd_is_zero(self):
        assert moment_of_traces(expr((S(0),) * 3)).is_zero()
        assert moment_of_traces(expr((S(0), C("A")), (S(0),) * 2)).is_zero()

    def test_constants_only(self):
        assert moment_of_traces(expr((C("Z"), C("Z")))) == N_(1, 7)

    @pytest.mark.parametrize("seed", range(12))
    def test_against_bruteforce_index_sums(self, seed):
        rng = random.Random(seed)
        gram = rand_gram(rng, 2)
        ens = [S, B, G][seed % 3]
        pool = [lambda: ens(rng.randrange(2)), lambda: C(rng.choice("AXZI"))]
        words = []
        for _ in range(rng.randint(1, 2)):
            words.append(tuple(rng.choice(pool)() for _ in range(rng.randint(1, 3))))
        letters = [l for w in words for l in w]
        if sum(1 for l in letters if not hasattr(l, "name")) % 2:
            words[0] = words[0] + (ens(0),)
        e = TraceExpression(tuple(words), gram, CONSTS)
        poly = moment_of_traces(e)
        for n in (2, 4):
            assert poly.evaluate(n) == brute_moment(e, n), str(e)

    def test_centering_expands(self):
        w = (S(0),) * 2
        e = expr((centered_power(S(0), 2), centered_power(S(0), 2)))
        manual = (moment_of_traces(expr(w + w)) - 2 * moment_of_traces(expr(w, w)).shift(-1)
                  + moment_of_traces(expr(w, w)).shift(-1))
        assert moment_of_traces(e) == manual == N_(1) - N_(-1)
        assert moment_of_traces(expr((Centered(w),))).is_zero()

    def test_combination_is_linear(self):
        w1, w2 = (S(0), S(1)), (S(1), C("A"), S(1))
        comb = Combination(((Fraction(2), w1), (Fraction(-1, 3), w2), (Fraction(5), ())))
        e = expr((comb, S(0), S(1)), gram=g2)
        manual = (2 * moment_of_traces(expr(w1 + (S(0), S(1)), gram=g2))
                  - Fraction(1, 3) * moment_of_traces(expr(w2 + (S(0), S(1)), gram=g2))
                  + 5 * moment_of_traces(expr((S(0), S(1)), gram=g2)))
        assert moment_of_traces(e) == manual

    def test_shifted_by_limit(self):
        p = shifted((S(0),) * 2, 1)
        assert moment_of_traces(expr((p,))) == NPolynomial()
        assert first_order_limit((p, p), g1) == 1

    def test_profiles_pad(self):
        big = ConstantProfile("D4", tuple(tuple(Fraction(int(i == j) * (i + 1)) for j in range(4)) for i in range(4)))
        e = expr((S(0), C("A"), S(0), C("D4")), consts={**CONSTS, "D4": big})
        assert e.d0 == 4
        poly = moment_of_traces(e)
        assert poly.evaluate(4) == brute_moment(e, 4)


class TestErrors:
    def test_mixed_ensembles(self):
        with pytest.raises(ExpressionError):
            expr((S(0), B(0)))

    def test_kind_mismatch(self):
        with pytest.raises(EngineError):
            cumulant_of_traces(K.BOOLEAN, expr((S(0),) * 2, (S(0),) * 2))

    def test_unknown_constant(self):
        with pytest.raises(ExpressionError):
            TraceExpression(((C("nope"),),), g1, {})

    def test_vector_range(self):
        with pytest.raises(ExpressionError):
            expr((S(3),))

    def test_realize_requires_multiple(self):
        with pytest.raises(ExpressionError):
            A.realize(3)


class TestCumulants:
    def test_examples(self):
        s2 = (S(0),) * 2
        assert cumulant_of_traces(K.FREE, expr(s2, s2)) == 1
        assert cumulant_of_traces(K.FREE, expr(s2, s2, s2)) == N_(-1)
        assert cumulant_of_traces(K.FREE, expr(s2, s2, s2, s2)) == N_(-2)
        assert cumulant_of_traces(K.CLASSICAL, expr((G(0),) * 2, (G(0),) * 2)) == 2
        assert cumulant_of_traces(K.BOOLEAN, expr((B(0),), (B(0),))) == 1

    def test_connected_examples(self):
        s2 = (S(0),) * 2
        assert connected_pairing_cumulant(expr(s2)) == N_(1)
        assert connected_pairing_cumulant(expr(s2, s2)) == 1
        assert connected_pairing_cumulant(expr(s2, s2, s2)) == N_(-1)

    @pytest.mark.parametrize("lengths", [(2,), (2, 2), (2, 2, 2), (4, 2), (1, 1), (3, 3), (2, 2, 2, 2),
                                         (4, 4), (3, 1, 2), (2, 4, 4), (1, 3, 2, 2), (6, 4), (5, 3, 2)])
    def test_connected_equals_lattice_and_bruteforce(self, lengths):
        e = expr(*[(S(0),) * l for l in lengths])
        lat = cumulant_of_traces(K.FREE, e)
        assert connected_pairing_cumulant(e) == lat == connected_nc2_bruteforce(lengths)

    def test_connected_with_gram(self, rng):
        g = rand_gram(rng, 2)
        for _ in range(10):
            words = [tuple(S(rng.randrange(2)) for _ in range(rng.randint(1, 3))) for _ in range(rng.randint(1, 3))]
            e = TraceExpression(tuple(words), g, {})
            assert connected_pairing_cumulant(e) == cumulant_of_traces(K.FREE, e)

    def test_connected_rejects_constants(self):
        with pytest.raises(EngineError):
            connected_pairing_cumulant(expr((S(0), C("A"), S(0))))

    def test_second_order_contrast(self):
        assert cumulant_of_traces(K.FREE, expr((S(0),) * 2, (S(0),) * 2)) == 1
        assert cumulant_of_traces(K.CLASSICAL, expr((G(0),) * 2, (G(0),) * 2)) == 2


def generated_suite(rng, ensemble, count, max_letters=10):
    letter = {"S": S, "B": B}[ensemble]
    out = []
    while len(out) < count:
        r = rng.randint(2, 4)
        words = []
        for _ in range(r):
            w = []
            for _ in range(rng.randint(1, 3)):
                w.append(letter(rng.randrange(2)))
                if rng.random() < 0.5:
                    w.append(C(rng.choice("AXZI")))
            words.append(tuple(w))
        m = sum(1 for w in words for l in w if not hasattr(l, "name"))
        if m % 2 or m > max_letters:
            continue
        out.append(TraceExpression(tuple(words), g2, CONSTS))
    return out


class TestScaling:
    def test_free_degree_bound(self):
        rng = random.Random(7)
        for rec in vanishing_higher_cumulants_report(generated_suite(rng, "S", 25)):
            assert rec.passed, (rec.case, str(rec.polynomial))

    def test_boolean_degree_bound(self):
        rng = random.Random(8)
        for rec in vanishing_higher_cumulants_report(generated_suite(rng, "B", 25)):
            assert rec.passed, (rec.case, str(rec.polynomial))

    def test_examples(self):
        y = (S(0), C("I"), S(0))
        recs = vanishing_higher_cumulants_report([expr(y, y, y), expr(*[(S(0),) * 2] * 4),
                                                  expr(*[(B(0), C("A"))] * 3)])
        assert recs[0].degree == -1 and recs[0].passed
        assert recs[1].degree <= -2 and recs[1].passed
        assert recs[2].passed


class TestFirstOrder:
    def test_examples(self):
        assert first_order_limit((S(0),) * 2, g1) == 1
        p1, p2 = shifted((S(0),) * 2, 1), shifted((S(1),) * 2, 1)
        assert first_order_limit((p1, p2), g2) == 0

    def test_boolean_powers(self):
        g = __import__("nctraces").GramSpace(((Fraction(4),),))
        for m in range(1, 9):
            assert first_order_limit((B(0),) * m, g) == (2 ** m if m % 2 == 0 else 0)

    def test_boolean_factorization(self):
        """Powers of distinct orthonormal Bernoulli matrices factor in the limit."""
        g = __import__("nctraces").GramSpace.orthonormal(3)
        checked = 0
        for p in range(1, 5):
            for exps in itertools.product(range(1, 8), repeat=p):
                if sum(exps) > 8:
                    continue
                for js in itertools.product(range(3), repeat=p):
                    if any(js[k] == js[k + 1] for k in range(p - 1)):
                        continue
                    word = tuple(l for j, e in zip(js, exps) for l in (B(j),) * e)
                    rhs = 1
                    for j, e in zip(js, exps):
                        rhs *= first_order_limit((B(j),) * e, g)
                    assert first_order_limit(word, g) == rhs
                    checked += 1
        assert checked > 100

    def test_freeness_checks(self):
        p, q = shifted((S(0),) * 2, 1), shifted((S(1),) * 2, 1)
        assert asymptotic_freeness_check([(p,), (q,), (p,), (q,)], g2) == 0
        assert asymptotic_freeness_check([(p,), (C("A"),), (p,), (C("A"),)], g2, CONSTS) == 0
        assert asymptotic_freeness_check([(p,), (p,)], g2) != 0
