"""Monomials, multidegrees, partitions and the dominance order.

Exponent vectors are plain tuples of nonnegative ints.  A tuple doubles as a
``Multidegree`` (a weight in Z^{n+1}), a ``Monomial`` of S = C[x_0..x_n], and,
when weakly decreasing, a ``Partition``.  Every ordered collection in the
package uses descending lexicographic order so that bases built by different
modules line up.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache
from itertools import accumulate
from math import factorial
from typing import Iterable, Mapping

Multidegree = tuple[int, ...]
Monomial = tuple[int, ...]
Partition = tuple[int, ...]


class IncomparableError(ValueError):
    """Raised when comparing partitions of different weight."""


def check_multidegree(a: Iterable[int]) -> Multidegree:
    a = tuple(int(x) for x in a)
    if any(x < 0 for x in a):
        raise ValueError(f"negative exponent in {a}")
    return a


def is_partition(lam: Iterable[int]) -> bool:
    lam = tuple(lam)
    return all(x >= 0 for x in lam) and all(lam[i] >= lam[i + 1] for i in range(len(lam) - 1))


@lru_cache(maxsize=None)
def _compositions(n_parts: int, total: int) -> tuple[Monomial, ...]:
    if n_parts == 1:
        return ((total,),)
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(n_parts - 1, total - first):
            out.append((first,) + rest)
    return tuple(out)


def monomial_basis(n: int, d: int) -> list[Monomial]:
    """All exponent vectors of length n+1 and total degree d, lex-descending."""
    if n < 0 or d < 0:
        raise ValueError("n and d must be nonnegative")
    return list(_compositions(n + 1, d))


def multidegrees(n: int, total: int) -> list[Multidegree]:
    """Alias of :func:`monomial_basis` used when the tuples are weights."""
    return monomial_basis(n, total)


def canonical_multidegrees(n: int, total: int) -> list[Multidegree]:
    """Weakly decreasing multidegrees of the given total, lex-descending."""
    return [a for a in monomial_basis(n, total) if is_partition(a)]


def add(u: Iterable[int], v: Iterable[int]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(u, v))


def sub(u: Iterable[int], v: Iterable[int]) -> tuple[int, ...]:
    return tuple(x - y for x, y in zip(u, v))


def dominates(lhs: Iterable[int], rhs: Iterable[int]) -> bool:
    """True when every prefix sum of ``lhs`` is at least that of ``rhs``."""
    lhs, rhs = tuple(lhs), tuple(rhs)
    if sum(lhs) != sum(rhs):
        raise IncomparableError(f"{lhs} and {rhs} have different weights")
    width = max(len(lhs), len(rhs))
    lhs = lhs + (0,) * (width - len(lhs))
    rhs = rhs + (0,) * (width - len(rhs))
    return all(x >= y for x, y in zip(accumulate(lhs), accumulate(rhs)))


def dominant_weights(weights: Iterable[Iterable[int]] | Mapping) -> set[tuple[int, ...]]:
    """Maximal elements of a weight set under the dominance order.

    Accepts any iterable of weights, or a mapping whose keys are weights
    (e.g. a graded multiset); zero multiplicities are ignored.
    """
    if isinstance(weights, Mapping):
        ws = {tuple(w) for w, m in weights.items() if m}
    else:
        ws = {tuple(w) for w in weights}
    if not ws:
        return set()
    totals = {sum(w) for w in ws}
    if len(totals) > 1:
        raise IncomparableError(f"weights of mixed totals {sorted(totals)}")
    # Sorting by prefix sums descending puts every dominator before what it dominates.
    ordered = sorted(ws, key=lambda w: tuple(accumulate(w)), reverse=True)
    maxima: list[tuple[int, ...]] = []
    for w in ordered:
        if not any(dominates(m, w) for m in maxima):
            maxima.append(w)
    return set(maxima)


def orbit_size(a: Iterable[int]) -> int:
    """Number of distinct permutations of ``a``."""
    a = tuple(a)
    size = factorial(len(a))
    for c in Counter(a).values():
        size //= factorial(c)
    return size


def sort_multidegree(a: Iterable[int]) -> tuple[Multidegree, int]:
    """Canonical (descending) representative of ``a`` and its orbit size."""
    a = tuple(a)
    return tuple(sorted(a, reverse=True)), orbit_size(a)


def orbit(a: Iterable[int]) -> list[Multidegree]:
    """All distinct permutations of ``a``, lex-descending."""
    from itertools import permutations

    return sorted(set(permutations(tuple(a))), reverse=True)


class GradedMultiset(dict):
    """Mapping multidegree -> positive multiplicity.

    Zero entries are dropped on construction and by :meth:`clean`.  Values may
    go negative transiently (e.g. during greedy subtraction); callers decide
    whether that is an error.
    """

    def __init__(self, data=None):
        super().__init__()
        if data:
            items = data.items() if isinstance(data, Mapping) else data
            for k, v in items:
                if v:
                    self[tuple(k)] = self.get(tuple(k), 0) + v
            self.clean()

    def clean(self) -> "GradedMultiset":
        for k in [k for k, v in self.items() if v == 0]:
            del self[k]
        return self

    def dimension(self) -> int:
        return sum(self.values())

    def totals(self) -> set[int]:
        return {sum(k) for k in self}

    def lex_leading(self) -> Multidegree | None:
        return max(self) if self else None

    def __add__(self, other):
        out = GradedMultiset(self)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return out.clean()

    def __sub__(self, other):
        out = GradedMultiset(self)
        for k, v in other.items():
            out[k] = out.get(k, 0) - v
        return out.clean()

    def scaled(self, c: int) -> "GradedMultiset":
        return GradedMultiset({k: c * v for k, v in self.items()})

    def specialize(self) -> int:
        """Value at t = (1, ..., 1)."""
        return sum(self.values())
