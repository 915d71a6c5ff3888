"""Multigraded strands of the Koszul complex of S(b;d).

A strand at multidegree ``a`` is the three-term complex

    (L^{p+1} S_d (x) S_{b+(q-1)d})_a -> (L^p S_d (x) S_{b+qd})_a -> (L^{p-1} S_d (x) S_{b+(q+1)d})_a

with L the exterior power.  A basis vector of the middle term is a p-subset W
of the degree-d monomials together with a cofactor monomial f, but f is forced
to be ``a - sum(W)``, so only W is stored.  Matrices are generated directly
per multidegree; the global differential is never materialized.

Setting ``artinian=True`` on a strand builds the same strand for the quotient
of S(b;d) by the pure powers x_i^d, over the polynomial ring on the remaining
degree-d monomials.  The pure powers form a regular sequence of torus-weight
vectors, so every multigraded Betti number is unchanged while the strands
shrink by orders of magnitude: wedge factors and cofactors are restricted to
exponents <= d-1 and terms with m_k*f outside that box vanish.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import accumulate
from math import comb
from pathlib import Path

import numpy as np

from .core import (
    Multidegree,
    add,
    canonical_multidegrees,
    check_multidegree,
    monomial_basis,
    orbit_size,
)


@dataclass(frozen=True)
class StrandSpec:
    """Indices of K_{p,q}(b;d)_a for P^n."""

    n: int
    d: int
    b: int
    p: int
    q: int
    a: Multidegree
    artinian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", check_multidegree(self.a))
        if len(self.a) != self.n + 1:
            raise ValueError(f"multidegree {self.a} has wrong length for n={self.n}")
        if self.d < 1 or self.p < 0:
            raise ValueError(f"invalid strand {self}")
        if sum(self.a) != self.d * (self.p + self.q) + self.b:
            raise ValueError(f"|a| = {sum(self.a)} != d(p+q)+b for {self}")

    @property
    def cofactor_degree(self) -> int:
        return self.b + self.q * self.d

    def shifted(self, dp: int) -> "StrandSpec":
        """Same multidegree, homological index moved by ``dp``."""
        return StrandSpec(self.n, self.d, self.b, self.p + dp, self.q - dp, self.a, self.artinian)

    def reduced(self) -> "StrandSpec":
        """The Artinian version of this strand."""
        return StrandSpec(self.n, self.d, self.b, self.p, self.q, self.a, True)

    @property
    def tag(self) -> str:
        base = f"n{self.n}_d{self.d}_b{self.b}_p{self.p}_a{'-'.join(map(str, self.a))}"
        return base + "_art" if self.artinian else base


@dataclass
class SparseSignMatrix:
    """Sparse matrix with +-1 entries, stored as COO triplets.

    ``rows``/``cols``/``vals`` are parallel int arrays.  Row and column labels
    are wedge tuples (indices into the degree-d monomial basis); they may be
    empty for matrices read back from disk.
    """

    nrows: int
    ncols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    row_labels: list = field(default_factory=list)
    col_labels: list = field(default_factory=list)

    @property
    def nnz(self) -> int:
        return int(len(self.vals))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def to_dense(self, dtype=np.int64) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=dtype)
        out[self.rows, self.cols] = self.vals
        return out

    def to_scipy(self):
        from scipy.sparse import coo_matrix

        return coo_matrix((self.vals, (self.rows, self.cols)), shape=self.shape).tocsc()

    def transpose(self) -> "SparseSignMatrix":
        return SparseSignMatrix(self.ncols, self.nrows, self.cols.copy(), self.rows.copy(),
                                self.vals.copy(), list(self.col_labels), list(self.row_labels))

    def nonzero_rows(self) -> int:
        return int(len(np.unique(self.rows)))

    def triplets(self) -> list[tuple[int, int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    @classmethod
    def from_dense(cls, arr) -> "SparseSignMatrix":
        arr = np.asarray(arr)
        r, c = np.nonzero(arr)
        order = np.lexsort((r, c))
        return cls(arr.shape[0], arr.shape[1], r[order], c[order], arr[r, c][order].astype(np.int64))

    @classmethod
    def empty(cls, nrows: int, ncols: int) -> "SparseSignMatrix":
        z = np.zeros(0, dtype=np.int64)
        return cls(nrows, ncols, z, z.copy(), z.copy())


@lru_cache(maxsize=None)
def _basis(n: int, d: int) -> tuple:
    return tuple(monomial_basis(n, d))


@lru_cache(maxsize=None)
def _alphabet(n: int, d: int, artinian: bool):
    """Allowed wedge factors and pruning tables.

    Returns (indices, lo, hi) where ``indices`` lists the usable positions in
    ``monomial_basis(n, d)`` and lo[c][t][k] / hi[c][t][k] are the smallest /
    largest possible coordinate-c sums of k factors taken from indices[t:].
    """
    mons = _basis(n, d)
    idx = [i for i, m in enumerate(mons) if not artinian or max(m) < d]
    L = len(idx)
    lo, hi = [], []
    for c in range(n + 1):
        lo_c, hi_c = [], []
        for t in range(L + 1):
            vals = sorted(mons[i][c] for i in idx[t:])
            lo_c.append([0] + list(accumulate(vals)))
            hi_c.append([0] + list(accumulate(reversed(vals))))
        lo.append(lo_c)
        hi.append(hi_c)
    return tuple(idx), lo, hi


def strand_basis(spec: StrandSpec) -> list[tuple[int, ...]]:
    """p-subsets W of the degree-d monomials with sum(W) <= a, lex order.

    Each W is a sorted tuple of indices into ``monomial_basis(n, d)``; the
    cofactor is ``a - sum(W)`` (see :func:`cofactor`).  For Artinian strands
    the pure powers are skipped and the cofactor must have exponents < d.
    """
    if spec.p < 0 or spec.cofactor_degree < 0:
        return []
    mons = _basis(spec.n, spec.d)
    idx, lo, hi = _alphabet(spec.n, spec.d, spec.artinian)
    L = len(idx)
    p = spec.p
    out: list[tuple[int, ...]] = []
    if p > L:
        return out
    stack: list[int] = []
    art = spec.artinian
    cap = spec.d - 1
    ncoord = spec.n + 1

    def feasible(t, need, budget):
        for c in range(ncoord):
            if lo[c][t][need] > budget[c]:
                return False
            if art and budget[c] - hi[c][t][need] > cap:
                return False
        return True

    def dfs(t: int, budget: tuple[int, ...]):
        need = p - len(stack)
        if need == 0:
            out.append(tuple(stack))
            return
        for u in range(t, L - need + 1):
            m = mons[idx[u]]
            nb = tuple(y - x for x, y in zip(m, budget))
            if min(nb) < 0 or not feasible(u + 1, need - 1, nb):
                continue
            stack.append(idx[u])
            dfs(u + 1, nb)
            stack.pop()

    if feasible(0, p, spec.a):
        dfs(0, spec.a)
    return out


def cofactor(spec: StrandSpec, wedge: tuple[int, ...]) -> tuple[int, ...]:
    mons = _basis(spec.n, spec.d)
    f = list(spec.a)
    for i in wedge:
        for j, x in enumerate(mons[i]):
            f[j] -= x
    return tuple(f)


def wedge_monomials(n: int, d: int, wedge) -> list[tuple[int, ...]]:
    mons = _basis(n, d)
    return [mons[i] for i in wedge]


def build_differential(spec: StrandSpec) -> SparseSignMatrix:
    """Matrix of d_{p,a}: columns = strand basis of ``spec``, rows = that of p-1.

    The column of m_1 ^ ... ^ m_p (x) f carries (-1)^k in the row of
    m_1 ^ .. ^ m_k-hat ^ .. ^ m_p (x) m_k f, k = 1..p.
    """
    if spec.p == 0:
        cols = strand_basis(spec)
        return SparseSignMatrix.empty(0, len(cols))
    cols = strand_basis(spec)
    target = spec.shifted(-1)
    rows = strand_basis(target)
    index = {w: i for i, w in enumerate(rows)}
    p = spec.p
    nnz = p * len(cols)
    r = np.empty(nnz, dtype=np.int64)
    c = np.empty(nnz, dtype=np.int64)
    v = np.empty(nnz, dtype=np.int64)
    pos = 0
    for j, w in enumerate(cols):
        for k in range(p):
            row = index.get(w[:k] + w[k + 1:])
            if row is None:  # only in Artinian strands: m_k * f is zero there
                continue
            r[pos] = row
            c[pos] = j
            v[pos] = -1 if k % 2 == 0 else 1  # (-1)^(k+1) with 0-based k
            pos += 1
    r, c, v = r[:pos], c[:pos], v[:pos]
    order = np.lexsort((r, c))
    return SparseSignMatrix(len(rows), len(cols), r[order], c[order], v[order], rows, cols)


def naive_differential(spec: StrandSpec) -> np.ndarray:
    """Dense d_{p,a} built from the full tensor bases (test oracle).

    Enumerates every (wedge, cofactor) pair of the right degrees and keeps
    those of multidegree a, then applies the Koszul formula symbolically.
    """
    from itertools import combinations

    mons = _basis(spec.n, spec.d)
    e_src = spec.cofactor_degree
    e_tgt = e_src + spec.d
    src = [(w, f) for w in combinations(range(len(mons)), spec.p) for f in monomial_basis(spec.n, e_src)
           if _deg(mons, w, f) == spec.a]
    tgt = [(w, f) for w in combinations(range(len(mons)), spec.p - 1) for f in monomial_basis(spec.n, e_tgt)
           if _deg(mons, w, f) == spec.a]
    index = {x: i for i, x in enumerate(tgt)}
    out = np.zeros((len(tgt), len(src)), dtype=np.int64)
    for j, (w, f) in enumerate(src):
        for k in range(1, spec.p + 1):
            rest = w[:k - 1] + w[k:]
            out[index[(rest, add(mons[w[k - 1]], f))], j] += (-1) ** k
    return out


def _deg(mons, w, f):
    tot = tuple(f)
    for i in w:
        tot = add(tot, mons[i])
    return tot


# ---------------------------------------------------------------------------
# dimensions without enumeration


@lru_cache(maxsize=None)
def _wedge_counts(d: int, artinian: bool = False) -> np.ndarray:
    """C[k, w0, w1] = number of k-subsets of S_d (n=2) with weight (w0, w1, *).

    With ``artinian`` the pure powers x_i^d are left out of the alphabet.
    """
    mons = [m for m in _basis(2, d) if not artinian or max(m) < d]
    nm = len(mons)
    width = nm * d + 1
    counts = np.zeros((nm + 1, width, width), dtype=np.int64)
    counts[0, 0, 0] = 1
    for m in mons:
        shifted = np.zeros_like(counts)
        shifted[1:, m[0]:, m[1]:] = counts[:-1, :width - m[0], :width - m[1]]
        counts += shifted
    return counts


def strand_dimension(spec: StrandSpec) -> int:
    """len(strand_basis(spec)) computed by a generating-function count (n=2)."""
    if spec.n != 2:
        return len(strand_basis(spec))
    p, e = spec.p, spec.cofactor_degree
    if p < 0 or e < 0:
        return 0
    counts = _wedge_counts(spec.d, spec.artinian)
    if p >= counts.shape[0]:
        return 0
    a0, a1, a2 = spec.a
    width = counts.shape[1]
    if spec.artinian:
        # sum over cofactors f in the box [0, d-1]^3 with |f| = e
        cap = spec.d - 1
        total = 0
        for f0 in range(min(cap, a0, e) + 1):
            for f1 in range(min(cap, a1, e - f0) + 1):
                f2 = e - f0 - f1
                if f2 > cap or f2 > a2:
                    continue
                w0, w1 = a0 - f0, a1 - f1
                if w0 < width and w1 < width:
                    total += int(counts[p, w0, w1])
        return total
    block = counts[p, :min(a0, width - 1) + 1, :min(a1, width - 1) + 1]
    i = np.arange(block.shape[0])[:, None]
    j = np.arange(block.shape[1])[None, :]
    return int(block[(i + j) >= p * spec.d - a2].sum())


def differential_shape(spec: StrandSpec) -> tuple[int, int]:
    """(rows, cols) of build_differential(spec) without building it."""
    rows = strand_dimension(spec.shifted(-1)) if spec.p > 0 else 0
    return rows, strand_dimension(spec)


def strand_inventory(n: int, b: int, d: int, pq_set) -> list[tuple[StrandSpec, int]]:
    """One strand per canonical multidegree for each (p, q), with orbit size."""
    out = []
    for p, q in sorted(pq_set):
        total = d * (p + q) + b
        if total < 0:
            continue
        for a in canonical_multidegrees(n, total):
            out.append((StrandSpec(n, d, b, p, q, a), orbit_size(a)))
    return out


def projective_dimension(n: int, d: int) -> int:
    """Codimension of the Veronese: dim S_d - (n+1)."""
    return comb(n + d, d) - (n + 1)


# ---------------------------------------------------------------------------
# matrix files


def matrix_filename(spec: StrandSpec) -> str:
    return f"{spec.tag}.mtx"


def write_matrix(m: SparseSignMatrix, path) -> Path:
    """Write ``rows cols nnz`` then one 0-indexed ``row col value`` per line."""
    path = Path(path)
    order = np.lexsort((m.rows, m.cols))
    lines = [f"{m.nrows} {m.ncols} {m.nnz}"]
    lines += [f"{r} {c} {v}" for r, c, v in zip(m.rows[order].tolist(), m.cols[order].tolist(),
                                               m.vals[order].tolist())]
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


class MatrixFileError(ValueError):
    pass


def read_matrix(path) -> SparseSignMatrix:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    try:
        nrows, ncols, nnz = (int(x) for x in text[0].split())
        body = [line for line in text[1:] if line.strip()]
        if len(body) != nnz:
            raise MatrixFileError(f"{path}: header says {nnz} entries, found {len(body)}")
        data = np.array([[int(x) for x in line.split()] for line in body], dtype=np.int64).reshape(-1, 3)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, MatrixFileError):
            raise
        raise MatrixFileError(f"{path}: malformed matrix file ({exc})") from exc
    r, c, v = data[:, 0], data[:, 1], data[:, 2]
    if nnz and (r.min() < 0 or r.max() >= nrows or c.min() < 0 or c.max() >= ncols):
        raise MatrixFileError(f"{path}: index out of range")
    if nnz and not np.all(np.abs(v) == 1):
        raise MatrixFileError(f"{path}: entries must be +-1")
    return SparseSignMatrix(nrows, ncols, r, c, v)
