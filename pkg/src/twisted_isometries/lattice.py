"""Truncated lattice Z_+^m ⊗ C^d modelling a vector-valued Hardy space on the polydisc.

Basis vectors are ``z^k ⊗ e_a`` with ``|k| = k_1 + ... + k_m <= N``. They are
ordered graded-lexicographically: by total degree, then lexicographically in
``k``, then by fiber slot. Because the order is graded, the basis of a lower
truncation is always a prefix of the basis of a higher one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb
from typing import NamedTuple

from .errors import InvalidInputError, TruncationError


@dataclass(frozen=True)
class LatticeSpec:
    m: int
    d: int
    N: int

    def __post_init__(self):
        if self.m < 0 or self.d < 1 or self.N < 0:
            raise InvalidInputError(f"invalid lattice spec m={self.m}, d={self.d}, N={self.N}")

    def with_N(self, N: int) -> "LatticeSpec":
        return LatticeSpec(self.m, self.d, N)

    @property
    def dim(self) -> int:
        return basis_size(self.m, self.d, self.N)

    def points(self, N: int | None = None):
        return lattice_points(self.m, self.N if N is None else N)


class GradedIndex(NamedTuple):
    k: tuple
    slot: int


def num_points(m: int, N: int) -> int:
    if N < 0:
        return 0
    return comb(N + m, m)


def basis_size(m: int, d: int, N: int) -> int:
    return num_points(m, N) * d


@lru_cache(maxsize=None)
def _points_of_degree(m: int, q: int) -> tuple:
    if m == 0:
        return ((),) if q == 0 else ()
    pts = []
    # multisets of size q from {0..m-1} ↔ exponent vectors of total degree q
    for combo in combinations_with_replacement(range(m), q):
        k = [0] * m
        for i in combo:
            k[i] += 1
        pts.append(tuple(k))
    return tuple(sorted(pts))


@lru_cache(maxsize=None)
def lattice_points(m: int, N: int) -> tuple:
    """All k in Z_+^m with |k| <= N, in graded-lex order."""
    if N < 0:
        return ()
    if m == 0:
        return ((),)
    out = []
    for q in range(N + 1):
        out.extend(_points_of_degree(m, q))
    return tuple(out)


@lru_cache(maxsize=None)
def point_index(m: int, N: int) -> dict:
    return {k: i for i, k in enumerate(lattice_points(m, N))}


def degree(k) -> int:
    return sum(k)


def enumerate_basis(spec: LatticeSpec) -> list:
    return [GradedIndex(k, a) for k in lattice_points(spec.m, spec.N) for a in range(spec.d)]


def slab(spec: LatticeSpec, k) -> range:
    """Basis positions of the d-dimensional block at lattice index ``k``."""
    k = tuple(int(x) for x in k)
    if len(k) != spec.m or any(x < 0 for x in k):
        raise InvalidInputError(f"{k} is not a lattice point of rank {spec.m}")
    if degree(k) > spec.N:
        raise TruncationError(f"|k| = {degree(k)} exceeds truncation N = {spec.N}")
    start = point_index(spec.m, spec.N)[k] * spec.d
    return range(start, start + spec.d)
