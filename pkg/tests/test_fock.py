import random
from fractions import Fraction

import pytest

from nctraces import GramSpace
from nctraces.cumulants import CumulantKind
from nctraces.engine import cumulant_of_traces, moment_of_traces
from nctraces.expressions import B, C, Centered, ConstantProfile, G, S, TraceExpression
from nctraces.fock import (
    DimensionError,
    ExactnessError,
    Flavor,
    FockSpace,
    OperatorRep,
    RealizationError,
    build_bernoulli_matrix,
    build_gaussian_matrix,
    build_semicircular_matrix,
    entry_moment,
    exactness_threshold,
    field_moment,
    oracle_cumulant,
    oracle_moment,
    rational_square_roots,
    realize_gram,
    scalar_field,
    vacuum_expectation,
)
from nctraces.scalars import GaussianRational, conj

from brute import brute_moment
from conftest import rand_gram

g1 = GramSpace.orthonormal(1)
g2 = GramSpace.orthonormal(2)
A = ConstantProfile("A", ((1, 0), (0, -1)))
Z = ConstantProfile("Z", ((1, 2), (3, -1)))
CONSTS = {"A": A, "Z": Z, "I": ConstantProfile.identity("I")}


class TestRealization:
    def test_square_roots(self):
        for q in (Fraction(2), Fraction(7, 3), Fraction(0), Fraction(1, 4), Fraction(23)):
            roots = rational_square_roots(q)
            assert sum(r * r for r in roots) == q

    @pytest.mark.parametrize("complex_", [False, True])
    def test_gram_reproduced(self, rng, complex_):
        for _ in range(5):
            g = rand_gram(rng, 3, complex_=complex_)
            V = realize_gram(g.gram)
            for a in range(3):
                for b in range(3):
                    ip = sum((x * conj(y) for x, y in zip(V[a], V[b])), Fraction(0))
                    assert ip == g.gram[a][b] or ip == conj(g.gram[a][b])

    def test_indefinite_rejected(self):
        with pytest.raises(RealizationError):
            realize_gram(((Fraction(1), Fraction(2)), (Fraction(2), Fraction(1))))


class TestOperators:
    def test_vacuum_expectation_basics(self):
        sp = FockSpace(Flavor.FULL, depth=1)
        f = scalar_field(sp, [Fraction(1)])
        op = sp.operator(f)
        dim = sp.materialized
        assert vacuum_expectation(OperatorRep.identity(dim)) == 1
        creation = OperatorRep(dim, {k: v for k, v in op.entries.items() if k[0] > k[1]})
        assert vacuum_expectation(creation) == 0
        assert vacuum_expectation(op @ op) == 1

    @pytest.mark.parametrize("flavor", list(Flavor))
    def test_field_self_adjoint(self, flavor):
        sp = FockSpace(flavor, depth=2)
        f = scalar_field(sp, [Fraction(1), GaussianRational(Fraction(1), Fraction(2))])
        assert sp.operator(f).is_self_adjoint()

    @pytest.mark.parametrize("builder,flavor", [(build_semicircular_matrix, Flavor.FULL),
                                                (build_bernoulli_matrix, Flavor.BOOLEAN),
                                                (build_gaussian_matrix, Flavor.SYMMETRIC)])
    def test_matrix_self_adjoint(self, builder, flavor):
        g = GramSpace(((Fraction(1), GaussianRational(Fraction(0), Fraction(1, 2))),
                       (GaussianRational(Fraction(0), Fraction(-1, 2)), Fraction(1))))
        sp = FockSpace(flavor, depth=1)
        m0, m1 = builder(2, 0, g, sp), builder(2, 1, g, sp)
        assert m0.is_self_adjoint() and m1.is_self_adjoint()

    def test_wrong_flavor_rejected(self):
        with pytest.raises(ValueError):
            build_semicircular_matrix(2, 0, g1, FockSpace(Flavor.BOOLEAN))
        with pytest.raises(ValueError):
            build_gaussian_matrix(2, 0, g1, FockSpace(Flavor.FULL, depth=1))

    def test_entry_covariance(self):
        sp = FockSpace(Flavor.FULL, depth=2)
        X = build_semicircular_matrix(2, 0, g1, sp)
        assert entry_moment([(X, 0, 1), (X, 1, 0)]) == Fraction(1, 2)
        assert entry_moment([(X, 0, 1), (X, 0, 1)]) == 0
        assert entry_moment([(X, 0, 0), (X, 0, 0)]) == Fraction(1, 2)

    def test_boolean_entry_covariance(self):
        sp = FockSpace(Flavor.BOOLEAN)
        X = build_bernoulli_matrix(3, 0, g1, sp)
        assert entry_moment([(X, 0, 1), (X, 1, 0)]) == Fraction(1, 3)
        assert entry_moment([(X, 0, 1), (X, 1, 2)]) == 0
        # Boolean: the four-fold moment keeps only the interval pairing
        assert entry_moment([(X, 0, 1), (X, 1, 0), (X, 0, 1), (X, 1, 0)]) == Fraction(1, 9)

    @pytest.mark.parametrize("flavor,expected", [(Flavor.FULL, 2), (Flavor.SYMMETRIC, 3), (Flavor.BOOLEAN, 1)])
    def test_fourth_field_moment(self, flavor, expected):
        assert field_moment(g1, (0, 0, 0, 0), flavor) == expected


def sample_exprs(rng, ens, count):
    out = []
    while len(out) < count:
        words = []
        for _ in range(rng.randint(1, 3)):
            w = []
            for _ in range(rng.randint(1, 3)):
                w.append(ens(rng.randrange(2)))
                if rng.random() < 0.3:
                    w.append(C(rng.choice("AZI")))
            words.append(tuple(w))
        e = TraceExpression(tuple(words), g2, CONSTS)
        if e.max_random_letters % 2 or e.max_random_letters > 6:
            continue
        out.append(e)
    return out


class TestOracle:
    def test_examples(self):
        s2 = (S(0),) * 2
        e = TraceExpression((s2, s2, s2), g1, {})
        assert oracle_cumulant(CumulantKind.FREE, e, 2) == Fraction(1, 2)
        assert oracle_cumulant(CumulantKind.FREE, e, 3) == Fraction(1, 3)
        assert oracle_moment(TraceExpression(((G(0),) * 4,), g1, {}), 2) == Fraction(9, 2)

    def test_exactness_error(self):
        e = TraceExpression(((S(0),) * 4,), g1, {})
        assert exactness_threshold(e) == 2
        with pytest.raises(ExactnessError):
            oracle_moment(e, 2, depth=1)

    def test_depth_invariance(self):
        e = TraceExpression(((S(0), S(1)) * 2, (S(0), S(1))), g2, {})
        need = exactness_threshold(e)
        assert oracle_moment(e, 2, depth=need) == oracle_moment(e, 2, depth=need + 1)

    def test_dimension_cap(self):
        e = TraceExpression(((S(0),) * 8,), g1, {})
        with pytest.raises(DimensionError):
            oracle_moment(e, 3, max_dimension=10)

    @pytest.mark.parametrize("ens,seed", [(S, 1), (B, 2), (G, 3)], ids=["free", "boolean", "classical"])
    def test_agrees_with_engine_and_bruteforce(self, ens, seed):
        rng = random.Random(seed)
        for e in sample_exprs(rng, ens, 8):
            poly = moment_of_traces(e)
            assert oracle_moment(e, 2) == poly.evaluate(2) == brute_moment(e, 2), str(e)
            stats = {}
            assert oracle_moment(e, 4, stats=stats) == poly.evaluate(4), str(e)
            assert stats["materialized"] <= 20000

    def test_agrees_at_three_with_identity(self):
        e = TraceExpression(((S(0), C("I"), S(1), S(0), S(1)), (S(0), S(0))), g2, CONSTS)
        assert oracle_moment(e, 3) == moment_of_traces(e).evaluate(3)

    def test_centered_and_cumulants(self):
        w = (S(0), S(0))
        e = TraceExpression((w + (Centered(w),), w, (S(1), Centered((S(0), S(1))), S(1))), g2, {})
        for kind in (CumulantKind.FREE,):
            poly = cumulant_of_traces(kind, e)
            assert oracle_cumulant(kind, e, 2) == poly.evaluate(2)

    def test_complex_gram(self, rng):
        g = rand_gram(rng, 2, complex_=True)
        e = TraceExpression(((S(0), S(1), S(1), S(0)), (S(1), S(0))), g, {})
        assert oracle_moment(e, 2) == moment_of_traces(e).evaluate(2)
