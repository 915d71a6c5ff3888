"""Multigraded Hilbert numerator of S(b;d) and what it determines.

The multigraded Hilbert series of S(b;d), as a module over Sym(S_d), is
A(t)/B(t) with B = prod_{|m|=d} (1 - t^m).  Because a minimal free
resolution has length C(d+2,2)-3 and regularity at most 2, the numerator

    A(t) = sum_p (-1)^p sum_a beta_{p,a} t^a

has no term above total degree N = d(C(d+2,2)-1) + b (the position
(C(d+2,2)-3, 2) has total degree d(C(d+2,2)-1) + b), so A is the truncation
of C(t)B(t), where C(t) is the Hilbert series of S(b;d).  Wherever a total
degree admits only one Betti-table position that can be nonzero, A gives the
multigraded Betti numbers there directly.

Polynomials in three variables are stored as dense int64 cubes indexed by
exponent, with entries of total degree > N held at zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from .core import GradedMultiset, Multidegree


class RangeValidationError(RuntimeError):
    """The built-in nonvanishing table disagrees with the data it was checked against."""


class IntegrityError(RuntimeError):
    """A numerator coefficient has the wrong sign for the only position it can come from."""


def degree_bound(d: int, b: int = 0) -> int:
    """Largest total degree of a Betti number of S(b;d)."""
    return d * (comb(d + 2, 2) - 1) + b


def _check_bd(b: int, d: int):
    if d < 1:
        raise ValueError("d must be positive")
    if not 0 <= b < d:
        raise ValueError(f"b must satisfy 0 <= b < d (got b={b}, d={d})")


def _totals(size: int) -> np.ndarray:
    i = np.arange(size)
    return i[:, None, None] + i[None, :, None] + i[None, None, :]


@dataclass
class NumeratorPolynomial:
    """Sparse view of a truncated polynomial: multidegree -> nonzero integer."""

    terms: dict
    bound: int

    @classmethod
    def from_cube(cls, cube: np.ndarray, bound: int) -> "NumeratorPolynomial":
        idx = np.argwhere(cube)
        vals = cube[tuple(idx.T)]
        return cls({tuple(int(x) for x in i): int(v) for i, v in zip(idx, vals)}, bound)

    def __getitem__(self, a) -> int:
        return self.terms.get(tuple(a), 0)

    def specialize(self) -> dict[int, int]:
        """Coefficients of A(t,t,t) by total degree."""
        out: dict[int, int] = {}
        for a, c in self.terms.items():
            out[sum(a)] = out.get(sum(a), 0) + c
        return {k: v for k, v in sorted(out.items()) if v}

    def standard_grading(self, b: int, d: int) -> dict[int, int]:
        """Coefficients of A in the standard grading of Sym(S_d): t^k for |a| = dk + b."""
        return {(k - b) // d: v for k, v in self.specialize().items()}

    def max_degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def lines(self) -> list[str]:
        return [f"{a[0]} {a[1]} {a[2]} {c}" for a, c in sorted(self.terms.items())]

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8")
        return path


def denominator(d: int, bound: int | None = None) -> NumeratorPolynomial:
    """prod over degree-d monomials m of (1 - t^m), truncated at total degree N."""
    return NumeratorPolynomial.from_cube(_denominator_cube(d, bound), bound or degree_bound(d))


def _denominator_cube(d: int, bound: int | None = None) -> np.ndarray:
    from .core import monomial_basis

    if d < 1:
        raise ValueError("d must be positive")
    n_ = degree_bound(d) if bound is None else bound
    size = n_ + 1
    cube = np.zeros((size, size, size), dtype=np.int64)
    cube[0, 0, 0] = 1
    keep = _totals(size) <= n_
    for m in monomial_basis(2, d):
        shifted = np.zeros_like(cube)
        shifted[m[0]:, m[1]:, m[2]:] = cube[:size - m[0], :size - m[1], :size - m[2]]
        cube -= shifted
        cube[~keep] = 0
    return cube


def _numerator_cube(b: int, d: int) -> np.ndarray:
    _check_bd(b, d)
    n_ = degree_bound(d, b)
    size = n_ + 1
    B = _denominator_cube(d, n_)
    tot = _totals(size)
    # A[a] = sum_{e <= a, |a - e| = b mod d} B[e]: split B by |e| mod d and take
    # three-dimensional prefix sums of each residue class.
    A = np.zeros_like(B)
    for r in range(d):
        part = np.where(tot % d == r, B, 0)
        pref = part.cumsum(0).cumsum(1).cumsum(2)
        sel = (tot - b) % d == r
        A[sel] = pref[sel]
    A[tot > n_] = 0
    return A


def numerator(b: int, d: int) -> NumeratorPolynomial:
    """The numerator A(t) of the multigraded Hilbert series of S(b;d)."""
    return NumeratorPolynomial.from_cube(_numerator_cube(b, d), degree_bound(d, b))


def numerator_by_multiplication(b: int, d: int) -> NumeratorPolynomial:
    """Same as :func:`numerator`, by explicit truncated multiplication.

    Independent route used as a test oracle: multiplies the truncated series
    C(t) by each factor (1 - t^m) in turn on Python dictionaries.
    """
    from .core import monomial_basis

    _check_bd(b, d)
    n_ = degree_bound(d, b)
    poly = {a: 1 for k in range(b, n_ + 1, d) for a in monomial_basis(2, k)}
    for m in monomial_basis(2, d):
        nxt = dict(poly)
        for a, c in poly.items():
            s = (a[0] + m[0], a[1] + m[1], a[2] + m[2])
            if sum(s) <= n_:
                nxt[s] = nxt.get(s, 0) - c
        poly = {a: c for a, c in nxt.items() if c}
    return NumeratorPolynomial(poly, n_)


# ---------------------------------------------------------------------------
# nonvanishing table and relevant range


@dataclass(frozen=True)
class NonvanishingTable:
    """Rows q -> set of p with K_{p,q}(b;d) != 0, for P^2."""

    b: int
    d: int
    rows: dict

    def nonzero(self, p: int, q: int) -> bool:
        return p in self.rows.get(q, ())

    def positions(self) -> set[tuple[int, int]]:
        return {(p, q) for q, ps in self.rows.items() for p in ps}


def nonvanishing_table(b: int, d: int) -> NonvanishingTable:
    """Positions of the Betti table of S(b;d) that are nonzero.

    Row 0 holds the generators, one per monomial of degree b.  With
    r = C(d+2,2)-3, b' = (-3-b) mod d and s = (b'+3+b)/d, the remaining
    nonzero positions are read off the dual module S(b';d).
    """
    _check_bd(b, d)
    if d == 1:
        return NonvanishingTable(b, d, {0: {0}, 1: set(), 2: set()})
    r = comb(d + 2, 2) - 3

    def h(x):
        return comb(x + 2, 2)

    bd = (-3 - b) % d
    s = (bd + 3 + b) // d
    rows = {0: set(range(0, h(b)))}
    if s == 2:
        rows[1] = set(range(r - h(bd) + 1, r + 1))
        rows[2] = set()
    else:
        rows[1] = set(range(b + 1, r - bd))
        rows[2] = set(range(r - h(bd) + 1, r + 1))
    return NonvanishingTable(b, d, rows)


def candidates(table: NonvanishingTable, total: int) -> list[tuple[int, int]]:
    """Nonzero positions (p, q) with d(p+q)+b = total, by decreasing p."""
    b, d = table.b, table.d
    if (total - b) % d:
        return []
    k = (total - b) // d
    return [(k - q, q) for q in (0, 1, 2) if k - q >= 0 and table.nonzero(k - q, q)]


def check_table_against_numerator(table: NonvanishingTable, A: NumeratorPolynomial) -> list[str]:
    """Necessary conditions the numerator imposes on the table.

    Every term of A must sit at a total degree with at least one candidate
    position, and where exactly one candidate exists its sign must be (-1)^p.
    Returns human-readable violations.
    """
    problems = []
    for a, c in A.terms.items():
        cand = candidates(table, sum(a))
        if not cand:
            problems.append(f"coefficient {c} at {a} but no nonzero position in total degree {sum(a)}")
        elif len(cand) == 1:
            p = cand[0][0]
            if (c > 0) != (p % 2 == 0):
                problems.append(f"coefficient {c} at {a} has wrong sign for p={p}")
    return problems


def check_table_against_betti(table: NonvanishingTable, totals: dict) -> list[str]:
    """Compare the table with a full Betti table {(p, q): value}."""
    pos = table.positions()
    problems = []
    for (p, q), v in totals.items():
        if bool(v) != ((p, q) in pos):
            problems.append(f"({p},{q}): table says {'nonzero' if (p, q) in pos else 'zero'}, value {v}")
    for p, q in pos:
        if (p, q) not in totals:
            problems.append(f"({p},{q}): table says nonzero, value missing")
    return problems


def relevant_range(b: int, d: int, validate: bool = True) -> set[tuple[int, int]]:
    """Positions (p, q) that are nonzero and have a nonzero diagonal neighbour.

    With ``validate`` the table is first checked against the Hilbert
    numerator; a failure raises :class:`RangeValidationError`, meaning every
    strand has to be computed instead.
    """
    table = nonvanishing_table(b, d)
    if validate:
        problems = check_table_against_numerator(table, numerator(b, d))
        if problems:
            raise RangeValidationError(f"nonvanishing table for (b={b}, d={d}) rejected: {problems[:3]}")
    out = set()
    for p, q in table.positions():
        if table.nonzero(p - 1, q + 1) or table.nonzero(p + 1, q - 1):
            out.add((p, q))
    return out


def ambiguous_pairs(b: int, d: int, validate: bool = True) -> list[tuple[int, int]]:
    """Upper members (p, q) of adjacent relevant pairs (p, q), (p-1, q+1)."""
    rr = relevant_range(b, d, validate)
    return sorted((p, q) for p, q in rr if (p - 1, q + 1) in rr)


# ---------------------------------------------------------------------------
# Betti numbers outside the relevant range


def betti_from_numerator(b: int, d: int, rr: set | None = None,
                         A: NumeratorPolynomial | None = None) -> dict[tuple[int, int], GradedMultiset]:
    """Multigraded Betti numbers at every position outside the relevant range.

    Returns {(p, q): GradedMultiset over all multidegrees}.  Positions in the
    relevant range are absent; every other nonzero position is present.
    """
    table = nonvanishing_table(b, d)
    if rr is None:
        rr = relevant_range(b, d)
    if A is None:
        A = numerator(b, d)
    out: dict[tuple[int, int], GradedMultiset] = {
        pq: GradedMultiset() for pq in table.positions() if pq not in rr}
    for a, c in A.terms.items():
        cand = candidates(table, sum(a))
        if len(cand) == 1 and cand[0] not in rr:
            p, q = cand[0]
            if (c > 0) != (p % 2 == 0):
                raise IntegrityError(f"coefficient {c} at {a} cannot come from p={p}")
            out[(p, q)][a] = abs(c)
        elif not cand:
            raise IntegrityError(f"coefficient {c} at {a} has no position to come from")
        elif any(pq not in rr for pq in cand):
            raise IntegrityError(f"total degree {sum(a)} mixes determined and relevant positions")
    return out


def coefficient_at(A: NumeratorPolynomial, a: Multidegree) -> int:
    return A[a]
