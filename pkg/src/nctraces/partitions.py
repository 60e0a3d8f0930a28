"""Partitions, pairings and permutations of the ordered set ``[n] = {1, ..., n}``.

All public objects are 1-based and immutable.  Enumerations return canonical
lists: set partitions are ordered lexicographically by their restricted growth
string, so ``enumerate_noncrossing_partitions(n)`` is a subsequence of
``enumerate_set_partitions(n)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Iterator, Sequence

MAX_PARTITION_N = 12
MAX_PAIRING_N = 14


class SizeError(ValueError):
    """Requested enumeration exceeds the supported size bound."""


class ContractError(ValueError):
    """Index contraction called on a configuration violating its parity condition."""


def _check_size(n: int, bound: int) -> None:
    if not isinstance(n, int) or n < 1 or n > bound:
        raise SizeError(f"n must satisfy 1 <= n <= {bound}, got {n!r}")


class SetPartition:
    """A partition of ``[n]`` into nonempty blocks.

    Blocks are stored sorted ascending and ordered by their minimum, so two
    partitions are equal exactly when their ``blocks`` tuples are equal.
    """

    __slots__ = ("n", "blocks", "_labels")

    def __init__(self, n: int, blocks: Iterable[Iterable[int]]) -> None:
        canon = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0] if b else 0))
        seen = [x for b in canon for x in b]
        if any(len(b) == 0 for b in canon):
            raise ValueError("blocks must be nonempty")
        if sorted(seen) != list(range(1, n + 1)):
            raise ValueError(f"blocks do not partition [1..{n}]: {canon}")
        self.n = n
        self.blocks = canon
        self._labels = None

    @classmethod
    def _trusted(cls, n: int, blocks: tuple[tuple[int, ...], ...]) -> SetPartition:
        obj = object.__new__(cls)
        obj.n = n
        obj.blocks = blocks
        obj._labels = None
        return obj

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> SetPartition:
        """Build from a label per element (``labels[k-1]`` is the block label of ``k``)."""
        groups: dict[int, list[int]] = {}
        for k, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(k)
        return cls._trusted(len(labels), tuple(sorted((tuple(g) for g in groups.values()),
                                                      key=lambda b: b[0])))

    @classmethod
    def one(cls, n: int) -> SetPartition:
        """The single-block partition ``1_n``."""
        return cls._trusted(n, (tuple(range(1, n + 1)),))

    @classmethod
    def discrete(cls, n: int) -> SetPartition:
        return cls._trusted(n, tuple((k,) for k in range(1, n + 1)))

    @property
    def labels(self) -> tuple[int, ...]:
        """Restricted growth string: block index (0-based, by minimum) of each element."""
        if self._labels is None:
            lab = [0] * self.n
            for idx, b in enumerate(self.blocks):
                for x in b:
                    lab[x - 1] = idx
            self._labels = tuple(lab)
        return self._labels

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.blocks)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SetPartition):
            return NotImplemented
        return self.n == other.n and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash((self.n, self.blocks))

    def __repr__(self) -> str:
        inner = "".join("(" + ",".join(map(str, b)) + ")" for b in self.blocks)
        return f"SetPartition({self.n}: {inner})"

    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    def is_interval(self) -> bool:
        return all(b[-1] - b[0] == len(b) - 1 for b in self.blocks)

    def is_noncrossing(self) -> bool:
        lab = self.labels
        lo = [b[0] for b in self.blocks]
        hi = [b[-1] for b in self.blocks]
        for b in self.blocks:
            for a, c in zip(b, b[1:]):
                for x in range(a + 1, c):
                    d = lab[x - 1]
                    if lo[d] < a or hi[d] > c:
                        return False
        return True

    def refines(self, other: SetPartition) -> bool:
        """``self <= other`` in the refinement order."""
        lab = other.labels
        return all(len({lab[x - 1] for x in b}) == 1 for b in self.blocks)

    def restrict(self, subset: Sequence[int]) -> SetPartition:
        """Induced partition on ``subset`` (relabelled to ``1..len(subset)``)."""
        pos = {x: k for k, x in enumerate(subset, start=1)}
        blocks = [[pos[x] for x in b if x in pos] for b in self.blocks]
        return SetPartition(len(subset), [b for b in blocks if b])


PairPartition = SetPartition


# -- enumeration -------------------------------------------------------------

def _rgs(n: int) -> Iterator[list[int]]:
    labels = [0] * n
    maxes = [0] * n

    def rec(k: int) -> Iterator[list[int]]:
        if k == n:
            yield labels
            return
        top = maxes[k - 1] + 1
        for v in range(top + 1):
            labels[k] = v
            maxes[k] = max(maxes[k - 1], v)
            yield from rec(k + 1)

    if n == 0:
        return
    maxes[0] = 0
    yield from rec(1)


def iter_set_partitions(n: int) -> Iterator[SetPartition]:
    _check_size(n, MAX_PARTITION_N)
    for lab in _rgs(n):
        yield SetPartition.from_labels(lab)


def enumerate_set_partitions(n: int) -> list[SetPartition]:
    """All of ``P(n)`` in canonical order (``Bell(n)`` elements)."""
    return list(iter_set_partitions(n))


@lru_cache(maxsize=None)
def _nc_blocks(length: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Non-crossing partitions of ``{0..length-1}`` as tuples of 0-based blocks."""
    if length == 0:
        return ((),)
    out = []
    rest = list(range(1, length))
    # block of 0 is {0} plus a chosen subset; gaps between consecutive members are filled
    for r in range(len(rest) + 1):
        for chosen in itertools.combinations(rest, r):
            members = (0,) + chosen
            gaps = []
            for a, b in zip(members, members[1:] + (length,)):
                gaps.append((a + 1, b - a - 1))
            fillings = [[tuple(tuple(x + start for x in blk) for blk in p) for p in _nc_blocks(size)]
                        for start, size in gaps]
            for combo in itertools.product(*fillings):
                out.append((members,) + tuple(blk for part in combo for blk in part))
    return tuple(out)


def _canonical(n: int, blocks0: Iterable[tuple[int, ...]]) -> SetPartition:
    blocks = tuple(sorted((tuple(x + 1 for x in b) for b in blocks0), key=lambda b: b[0]))
    return SetPartition._trusted(n, blocks)


def enumerate_noncrossing_partitions(n: int) -> list[SetPartition]:
    """``NC(n)`` in canonical order (``Catalan(n)`` elements)."""
    _check_size(n, MAX_PARTITION_N)
    parts = [_canonical(n, bl) for bl in _nc_blocks(n)]
    parts.sort(key=lambda p: p.labels)
    return parts


@lru_cache(maxsize=None)
def _pairings(elems: tuple[int, ...], noncrossing: bool) -> tuple[tuple[tuple[int, int], ...], ...]:
    if not elems:
        return ((),)
    first, rest = elems[0], elems[1:]
    out = []
    for idx, partner in enumerate(rest):
        if noncrossing:
            if idx % 2:
                continue
            inside, outside = rest[:idx], rest[idx + 1:]
            for a in _pairings(inside, True):
                for b in _pairings(outside, True):
                    out.append(((first, partner),) + a + b)
        else:
            remaining = rest[:idx] + rest[idx + 1:]
            for p in _pairings(remaining, False):
                out.append(((first, partner),) + p)
    return tuple(out)


def _pair_partitions(n: int, noncrossing: bool) -> list[SetPartition]:
    _check_size(n, MAX_PAIRING_N)
    if n % 2:
        return []
    parts = [SetPartition._trusted(n, tuple(sorted(p))) for p in _pairings(tuple(range(1, n + 1)), noncrossing)]
    parts.sort(key=lambda p: p.labels)
    return parts


def enumerate_pair_partitions(n: int) -> list[SetPartition]:
    """``P_2(n)``: empty for odd ``n``, ``(n-1)!!`` pairings otherwise."""
    return _pair_partitions(n, noncrossing=False)


def enumerate_noncrossing_pairings(n: int) -> list[SetPartition]:
    """``NC_2(n)``: ``Catalan(n/2)`` pairings for even ``n``."""
    return _pair_partitions(n, noncrossing=True)


def enumerate_interval_partitions(n: int) -> list[SetPartition]:
    """``I(n)``: one partition per composition of ``n`` (``2**(n-1)`` elements)."""
    _check_size(n, MAX_PARTITION_N)
    parts = []
    for cuts in itertools.product((False, True), repeat=n - 1):
        blocks, cur = [], [1]
        for k, cut in enumerate(cuts, start=2):
            if cut:
                blocks.append(tuple(cur))
                cur = []
            cur.append(k)
        blocks.append(tuple(cur))
        parts.append(SetPartition._trusted(n, tuple(blocks)))
    parts.sort(key=lambda p: p.labels)
    return parts


def interval_pairing(n: int) -> SetPartition | None:
    """The unique element of ``I_2(n)``, or ``None`` when ``n`` is odd."""
    _check_size(n, MAX_PAIRING_N)
    if n % 2:
        return None
    return SetPartition._trusted(n, tuple((2 * k - 1, 2 * k) for k in range(1, n // 2 + 1)))


# -- lattice -----------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def join(p: SetPartition, q: SetPartition) -> SetPartition:
    """Least upper bound ``p v q`` in the refinement order."""
    if p.n != q.n:
        raise ValueError(f"join of partitions on different sets: {p.n} vs {q.n}")
    uf = _UnionFind(p.n + 1)
    for part in (p, q):
        for b in part.blocks:
            for x in b[1:]:
                uf.union(b[0], x)
    return SetPartition.from_labels([uf.find(k) for k in range(1, p.n + 1)])


# -- permutations ------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """Bijection of ``[n]``; ``images[k-1] == self(k)``.

    Products compose right to left: ``(s * t)(k) == s(t(k))``.
    """

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation of [1..{len(self.images)}]: {self.images}")

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int) -> Permutation:
        images = list(range(1, n + 1))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a - 1] = b
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, k: int) -> int:
        return self.images[k - 1]

    def __mul__(self, other: Permutation) -> Permutation:
        if self.n != other.n:
            raise ValueError("composition of permutations of different sizes")
        return Permutation(tuple(self.images[other.images[k] - 1] for k in range(self.n)))

    def inverse(self) -> Permutation:
        inv = [0] * self.n
        for k, v in enumerate(self.images, start=1):
            inv[v - 1] = k
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycle decomposition, each cycle starting at its minimum, ordered by minimum."""
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            k = start
            while not seen[k]:
                seen[k] = True
                cyc.append(k)
                k = self.images[k - 1]
            out.append(tuple(cyc))
        return out

    def num_cycles(self) -> int:
        return len(self.cycles())

    def __repr__(self) -> str:
        return "Permutation(" + "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles()) + ")"


def as_permutation(p: SetPartition) -> Permutation:
    """Pairing ``->`` product of the transpositions given by its blocks."""
    if not p.is_pairing():
        raise ValueError("only pairings correspond to involutions")
    return Permutation.from_cycles(p.blocks, p.n)


def as_partition(g: Permutation) -> SetPartition:
    """Permutation ``->`` partition whose blocks are its cycles (as sets)."""
    return SetPartition._trusted(g.n, tuple(tuple(sorted(c)) for c in g.cycles()))


def check_genus_bound(t: Permutation, s: Permutation) -> tuple[int, int, bool]:
    """``#(t) + #(t^-1 s) + #(s) <= n + 2 #(t v s)``; returns ``(lhs, rhs, holds)``."""
    if t.n != s.n:
        raise ValueError("permutations of different sizes")
    lhs = t.num_cycles() + (t.inverse() * s).num_cycles() + s.num_cycles()
    rhs = t.n + 2 * len(join(as_partition(t), as_partition(s)))
    return lhs, rhs, lhs <= rhs


# -- traces and index contraction -------------------------------------------

def _matmul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), 0) for j in range(n)] for i in range(n)]


def _trace(a):
    return sum((a[i][i] for i in range(len(a))), 0)


def trace_along(s: Permutation, matrices: Sequence[Sequence[Sequence]]) -> object:
    """``Tr_s(A_1, ..., A_m)``: product over cycles ``(i1 i2 ... il)`` of ``Tr(A_i1 A_i2 ... A_il)``."""
    if len(matrices) != s.n:
        raise ValueError(f"need {s.n} matrices, got {len(matrices)}")
    dims = {len(m) for m in matrices} | {len(row) for m in matrices for row in m}
    if len(dims) != 1:
        raise ValueError("matrices must be square of a common dimension")
    out = 1
    for cyc in s.cycles():
        prod = reduce(_matmul, (matrices[k - 1] for k in cyc))
        out = out * _trace(prod)
    return out


@dataclass(frozen=True)
class MultiIndexConstraint:
    """Equality classes of index slots: a multi-index ``j`` is admissible when it is
    constant on every class."""

    n: int
    classes: SetPartition

    @classmethod
    def from_permutation(cls, g: Permutation) -> MultiIndexConstraint:
        """The constraint ``j = j o g`` (``g(k) = l`` forces ``j_k = j_l``)."""
        return cls(g.n, as_partition(g))

    def admits(self, j: Sequence[int]) -> bool:
        return all(len({j[x - 1] for x in b}) == 1 for b in self.classes.blocks)

    def assignments(self, dim: int) -> Iterator[tuple[int, ...]]:
        """All admissible multi-indices with entries in ``range(dim)``."""
        blocks = self.classes.blocks
        for values in itertools.product(range(dim), repeat=len(blocks)):
            j = [0] * self.n
            for b, v in zip(blocks, values):
                for x in b:
                    j[x - 1] = v
            yield tuple(j)


def contract_indices(pairing: SetPartition, sigma: Permutation, matrix_slots: int) -> Permutation:
    """Resolve a paired index sum into a trace along a permutation.

    Matrix ``k`` (``1 <= k <= m``) reads its row index from slot ``sigma(2k-1)``
    and its column index from slot ``sigma(2k)``; ``pairing`` identifies slots.
    When every column position is paired with a row position, i.e.
    ``k + rho(k)`` is odd for ``rho = sigma^-1 * pairing * sigma``, the
    constrained sum of entry products equals ``Tr_tau(A_1, ..., A_m)`` with
    ``tau(k)`` the matrix whose row slot is paired with the column slot of ``k``.
    """
    m = matrix_slots
    if pairing.n != 2 * m or sigma.n != 2 * m:
        raise ValueError(f"pairing and sigma must act on [1..{2 * m}]")
    if not pairing.is_pairing():
        raise ValueError("pairing must have blocks of size 2")
    pi = as_permutation(pairing)
    rho = sigma.inverse() * pi * sigma
    bad = [k for k in range(1, 2 * m + 1) if (k + rho(k)) % 2 == 0]
    if bad:
        raise ContractError(f"parity condition fails at positions {bad}")
    # rho sends the column position 2k of matrix k to the row position 2k'-1 of tau(k)
    return Permutation(tuple((rho(2 * k) + 1) // 2 for k in range(1, m + 1)))
