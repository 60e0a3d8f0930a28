import random
from fractions import Fraction

import pytest

from nctraces.scalars import GaussianRational
from nctraces.wick import GramSpace


def rand_fraction(rng: random.Random, lo: int = -3, hi: int = 3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 3))


def rand_matrix(rng: random.Random, d: int):
    return [[rand_fraction(rng) for _ in range(d)] for _ in range(d)]


def rand_gram(rng: random.Random, k: int, complex_: bool = False) -> GramSpace:
    """``G = V* V`` for a random exact ``V``: Hermitian and positive semidefinite."""
    def entry():
        re = rand_fraction(rng, -2, 2)
        return GaussianRational(re, rand_fraction(rng, -2, 2)) if complex_ else re

    v = [[entry() for _ in range(k)] for _ in range(k)]
    g = [[sum((_conj(v[t][i]) * v[t][j] for t in range(k)), Fraction(0)) for j in range(k)] for i in range(k)]
    return GramSpace(tuple(map(tuple, g)))


def _conj(x):
    return x.conjugate() if isinstance(x, GaussianRational) else x


@pytest.fixture
def rng():
    return random.Random(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
