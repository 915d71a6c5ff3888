"""Matrix rank over prime fields (exact) and by pivoted floating LU.

The prime-field backend runs a sparse elimination with Markowitz pivot
selection while the active submatrix stays sparse, then finishes the
remaining block with dense vectorized elimination.  Koszul differentials have
few nonzeros per column, and most of them disappear in the sparse phase
without fill.

The float backend uses the same sparse phase with threshold partial pivoting,
finishes with complete pivoting on the dense remainder, and reads off the
numerical rank at every tolerance of a sweep from the pivot magnitudes.
"""
from __future__ import annotations

import heapq
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .koszul import SparseSignMatrix

DEFAULT_TOLERANCES = (1e-12, 1e-10, 1e-8, 1e-6)
_MIN_PRIME = 2**20


class RankError(RuntimeError):
    """Raised when independent primes keep disagreeing on a rank."""


class MemoryCeilingExceeded(MemoryError):
    """The estimated working set of an elimination exceeds the allowed ceiling."""


@dataclass
class RankResult:
    rank: int
    method: str  # "prime_field" or "float_lu"
    primes_used: list = field(default_factory=list)
    tolerances_used: list = field(default_factory=list)
    per_trial: list = field(default_factory=list)
    agreement: bool = True
    elapsed_ms: float = 0.0
    peak_mem_bytes: int = 0


# ---------------------------------------------------------------------------
# primes


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for base in (2, 3, 5, 7, 11, 13, 17):  # deterministic below 3.4e14
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_primes(k: int, seed: int | None = 0, bits: int = 30) -> list[int]:
    """``k`` distinct random primes in [2^(bits-1), 2^bits)."""
    rng = random.Random(seed)
    out: list[int] = []
    while len(out) < k:
        cand = rng.randrange(2 ** (bits - 1), 2**bits) | 1
        if _is_prime(cand) and cand not in out:
            out.append(cand)
    return out


# ---------------------------------------------------------------------------
# prime-field elimination


def _matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """a @ b mod p for int64 arrays with entries in [0, p), p < 2^31.

    Products go through float64 BLAS.  ``b`` is split into 16-bit halves and
    the inner dimension is chunked so every partial sum stays below 2^53 and
    is therefore exact.
    """
    if a.size == 0 or b.size == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    chunk = max(1, (1 << 53) // (p * (1 << 16)))
    lo_b = (b & 0xFFFF).astype(np.float64)
    hi_b = (b >> 16).astype(np.float64)
    out = None
    for k0 in range(0, a.shape[1], chunk):
        af = a[:, k0:k0 + chunk].astype(np.float64)
        hi = (af @ hi_b[k0:k0 + chunk]).astype(np.int64)
        hi %= p
        hi <<= 16
        hi += (af @ lo_b[k0:k0 + chunk]).astype(np.int64)  # < 2^47 + 2^53
        hi %= p
        if out is None:
            out = hi
        else:
            out += hi
            out %= p
    return out


def _base_pivots(a: np.ndarray, p: int) -> tuple[list[int], list[int]]:
    """Pivot rows and columns of plain Gaussian elimination mod p (narrow ``a``)."""
    a = a.copy()
    alive = np.ones(a.shape[0], dtype=bool)
    prows, pcols = [], []
    for c in range(a.shape[1]):
        nz = np.flatnonzero(alive & (a[:, c] != 0))
        if nz.size == 0:
            continue
        r = int(nz[0])
        alive[r] = False
        inv = pow(int(a[r, c]), p - 2, p)
        prow = a[r, c:] * inv % p
        hit = nz[1:]
        if hit.size:
            a[hit, c:] = (a[hit, c:] - np.outer(a[hit, c], prow) % p) % p
        prows.append(r)
        pcols.append(c)
    return prows, pcols


def _gauss_jordan_inverse(a: np.ndarray, p: int) -> np.ndarray:
    n = a.shape[0]
    aug = np.concatenate([a % p, np.eye(n, dtype=np.int64)], axis=1)
    for c in range(n):
        piv = c + int(np.flatnonzero(aug[c:, c])[0])
        if piv != c:
            aug[[c, piv]] = aug[[piv, c]]
        aug[c] = aug[c] * pow(int(aug[c, c]), p - 2, p) % p
        f = aug[:, c].copy()
        f[c] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            aug[hit] = (aug[hit] - np.outer(f[hit], aug[c]) % p) % p
    return aug[:, n:]


def _inverse_mod(a: np.ndarray, p: int, base: int = 32) -> np.ndarray:
    """Inverse mod p of a square matrix whose leading principal minors are
    all nonzero (true for a pivot block listed in elimination order).

    Recursive 2x2 block inversion through the Schur complement; small blocks
    use Gauss-Jordan with row swaps.
    """
    n = a.shape[0]
    if n <= base:
        return _gauss_jordan_inverse(a, p)
    h = n // 2
    A, B, C, D = a[:h, :h], a[:h, h:], a[h:, :h], a[h:, h:]
    Ai = _inverse_mod(A, p, base)
    CAi = _matmul_mod(C, Ai, p)
    Si = _inverse_mod((D - _matmul_mod(CAi, B, p)) % p, p, base)
    AiB = _matmul_mod(Ai, B, p)
    top_right = (-_matmul_mod(AiB, Si, p)) % p
    bottom_left = (-_matmul_mod(Si, CAi, p)) % p
    top_left = (Ai - _matmul_mod(top_right, CAi, p)) % p
    return np.block([[top_left, top_right], [bottom_left, Si]])


def _block_pivots(a: np.ndarray, p: int, panel: int = 256, base: int = 16) -> tuple[list[int], list[int]]:
    """Pivot rows and columns of ``a`` mod p by blocked elimination.

    Pivots of a column panel are found recursively; the remaining rows are
    then replaced by the Schur complement of the pivot block, so every panel
    sees a matrix whose earlier columns are already eliminated.
    """
    if a.shape[1] <= base:
        return _base_pivots(a, p)
    rows = np.arange(a.shape[0])
    col0 = 0
    prows: list[int] = []
    pcols: list[int] = []
    while a.shape[0] and a.shape[1]:
        k = min(panel, a.shape[1])
        pr, pc = _block_pivots(a[:, :k], p, max(base, panel // 4), base)
        if pr:
            prows.extend(int(rows[i]) for i in pr)
            pcols.extend(col0 + c for c in pc)
            rest = np.ones(a.shape[0], dtype=bool)
            rest[pr] = False
            piv = a[pr]
            coeff = _matmul_mod(a[rest][:, pc], _inverse_mod(piv[:, pc], p), p)
            nxt = a[rest, k:]
            nxt -= _matmul_mod(coeff, piv[:, k:], p)
            nxt %= p  # numpy's % is nonnegative for a positive modulus
            a, rows = nxt, rows[rest]
        else:
            a = a[:, k:]
        col0 += k
    return prows, pcols


def _dense_rank_mod(a: np.ndarray, p: int, panel: int = 256) -> int:
    """Rank of a dense int64 matrix mod p (see :func:`_block_pivots`)."""
    a = np.asarray(a, dtype=np.int64) % p
    if a.shape[0] < a.shape[1]:
        a = a.T
    return len(_block_pivots(np.ascontiguousarray(a), p, panel)[0])


def _sparse_eliminate(m: SparseSignMatrix, p: int | None, dense_density: float = 0.05,
                      mem_ceiling: int | None = None, threshold: float = 0.1,
                      drop: float = 1e-13):
    """Markowitz elimination over GF(p), or over floats when ``p`` is None.

    Returns ``(rank, pivots, dense_block, peak_bytes)``: the number of sparse
    pivots, their magnitudes (floats only), the remaining active submatrix as
    a dense array (or None), and an estimate of the peak working set.  Float
    mode uses threshold partial pivoting: a pivot must be at least
    ``threshold`` times the largest magnitude in its column, and updated
    entries with magnitude ``<= drop`` are treated as cancelled.
    """
    exact = p is not None
    r_idx, c_idx = m.rows.tolist(), m.cols.tolist()
    if m.nrows > m.ncols:  # eliminate along the short side
        r_idx, c_idx = c_idx, r_idx
    rows: dict[int, dict] = {}
    cols: dict[int, set[int]] = {}
    for r, c, v in zip(r_idx, c_idx, m.vals.tolist()):
        rows.setdefault(r, {})[c] = v % p if exact else float(v)
        cols.setdefault(c, set()).add(r)
    nnz = m.nnz
    peak = 96 * nnz
    heap = [(len(s), c) for c, s in cols.items()]
    heapq.heapify(heap)
    rank = 0
    pivots: list[float] = []
    while rows and cols:
        if mem_ceiling is not None and peak > mem_ceiling:
            raise MemoryCeilingExceeded(f"working set {peak} B exceeds {mem_ceiling} B")
        if len(rows) > 32 and nnz > dense_density * len(rows) * len(cols):
            live = sorted(cols)
            dense_bytes = 8 * len(rows) * len(live) * 3
            peak = max(peak, dense_bytes + 96 * nnz)
            if mem_ceiling is not None and peak > mem_ceiling:
                raise MemoryCeilingExceeded(f"dense block of {dense_bytes} B exceeds {mem_ceiling} B")
            cmap = {c: j for j, c in enumerate(live)}
            block = np.zeros((len(rows), len(live)), dtype=np.int64 if exact else np.float64)
            for i, row in enumerate(rows.values()):
                for c, v in row.items():
                    block[i, cmap[c]] = v
            return rank, pivots, block, peak
        # Markowitz: sparsest column, then its sparsest acceptable row; ties -> lowest index.
        while True:
            cnt, c = heapq.heappop(heap)
            s = cols.get(c)
            if s is not None and len(s) == cnt:
                break
            if s is not None:
                heapq.heappush(heap, (len(s), c))
        cand = cols[c]
        if not exact:
            big = max(abs(rows[i][c]) for i in cand)
            cand = [i for i in cand if abs(rows[i][c]) >= threshold * big]
        pr = min(cand, key=lambda i: (len(rows[i]), i))
        prow = rows.pop(pr)
        pv = prow[c]
        if exact:
            inv = pow(pv, p - 2, p)
        else:
            pivots.append(abs(pv))
        for cc in prow:
            cols[cc].discard(pr)
        nnz -= len(prow)
        for i in list(cols[c]):
            row = rows[i]
            f = row[c] * inv % p if exact else row[c] / pv
            nnz -= len(row)
            for cc, v in prow.items():
                if exact:
                    nv = (row.get(cc, 0) - f * v) % p
                else:
                    nv = row.get(cc, 0.0) - f * v
                    if cc == c or abs(nv) <= drop:
                        nv = 0
                if nv:
                    if cc not in row:
                        cols[cc].add(i)
                    row[cc] = nv
                elif cc in row:
                    del row[cc]
                    cols[cc].discard(i)
            nnz += len(row)
            if not row:
                del rows[i]
        for cc in prow:
            s = cols.get(cc)
            if s is None:
                continue
            if not s:
                del cols[cc]
            else:
                heapq.heappush(heap, (len(s), cc))
        cols.pop(c, None)
        rank += 1
        peak = max(peak, 96 * nnz)
    return rank, pivots, None, peak


def _rank_mod_p(m: SparseSignMatrix, p: int, mem_ceiling: int | None = None) -> tuple[int, int]:
    """(rank mod p, estimated peak working-set bytes)."""
    if m.nnz == 0:
        return 0, 0
    rank, _, block, peak = _sparse_eliminate(m, p, mem_ceiling=mem_ceiling)
    if block is not None:
        rank += _dense_rank_mod(block, p)
    return rank, peak


def rank_prime_field(m: SparseSignMatrix, primes: Sequence[int] | None = None, *,
                     seed: int | None = 0, extra: int = 2,
                     mem_ceiling: int | None = None) -> RankResult:
    """Exact rank over several random prime fields.

    Uses three random 30-bit primes unless ``primes`` is given.  If they
    disagree, ``extra`` more primes are tried; if the maximum is still not
    attained by a majority, :class:`RankError` is raised.
    """
    if primes is None:
        primes = random_primes(3, seed)
    primes = list(primes)
    for q in primes:
        if q < 2:
            raise ValueError(f"{q} is not a prime")
        if q < _MIN_PRIME or not _is_prime(q):
            raise ValueError(f"{q} must be a prime above 2^20")
    if len(set(primes)) != len(primes):
        raise ValueError("primes must be distinct")
    t0 = time.perf_counter()
    ranks, peak = [], 0
    for q in primes:
        rk, pk = _rank_mod_p(m, q, mem_ceiling=mem_ceiling)
        ranks.append(rk)
        peak = max(peak, pk)
    agreement = len(set(ranks)) == 1
    if not agreement and extra:
        more = [q for q in random_primes(len(primes) + extra + 3, (seed or 0) + 7919) if q not in primes][:extra]
        for q in more:
            rk, pk = _rank_mod_p(m, q, mem_ceiling=mem_ceiling)
            ranks.append(rk)
            peak = max(peak, pk)
        primes = primes + more
        top = max(ranks)
        if ranks.count(top) * 2 <= len(ranks):
            raise RankError(f"prime ranks disagree: {dict(zip(primes, ranks))}")
    return RankResult(max(ranks), "prime_field", primes_used=primes, per_trial=ranks,
                      agreement=agreement, elapsed_ms=1000 * (time.perf_counter() - t0),
                      peak_mem_bytes=peak)


# ---------------------------------------------------------------------------
# floating LU


def lu_pivots(a: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """|U_kk| of an LU factorization with complete pivoting.

    Stops early once every remaining entry is at most ``floor``; the returned
    sequence is then shorter than min(shape).
    """
    a = np.array(a, dtype=np.float64)
    m, n = a.shape
    out = []
    for k in range(min(m, n)):
        sub = np.abs(a[k:, k:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, n - k)
        piv = sub[i, j]
        if piv <= floor:
            break
        i += k
        j += k
        if i != k:
            a[[k, i], k:] = a[[i, k], k:]
        if j != k:
            a[k:, [k, j]] = a[k:, [j, k]]
        out.append(abs(a[k, k]))
        if k + 1 < m:
            mult = a[k + 1:, k] / a[k, k]
            a[k + 1:, k + 1:] -= np.outer(mult, a[k, k + 1:])
    return np.asarray(out)


def rank_float_lu(m: SparseSignMatrix, tolerances: Sequence[float] = DEFAULT_TOLERANCES,
                  sparse: bool = True) -> RankResult:
    """Numerical rank for each tolerance; the reported rank is the plateau (mode).

    The factorization is a sparse threshold-pivoted phase followed by complete
    pivoting on the dense remainder (``sparse=False`` skips the first phase).
    Numerical rank at tolerance t counts pivots |U_kk| > t.  Ties between
    equally frequent values go to the one found at the larger tolerance.
    """
    tolerances = [float(t) for t in tolerances]
    if not tolerances or any(t <= 0 for t in tolerances):
        raise ValueError("tolerances must be positive")
    if tolerances != sorted(tolerances):
        raise ValueError("tolerances must be sorted ascending")
    t0 = time.perf_counter()
    if m.nnz == 0:
        counts = [0] * len(tolerances)
        peak = 0
    else:
        if sparse:
            _, head, block, peak = _sparse_eliminate(m, None)
        else:
            head, block = [], m.to_dense(np.float64)
            peak = block.nbytes
        piv = np.asarray(head, dtype=np.float64)
        if block is not None and block.size:
            piv = np.concatenate([piv, lu_pivots(block, floor=min(tolerances))])
            peak = max(peak, 2 * block.nbytes)
        counts = [int(np.count_nonzero(piv > t)) for t in tolerances]
    freq = Counter(counts)
    best = max(freq.values())
    rank = next(c for c in reversed(counts) if freq[c] == best)
    return RankResult(rank, "float_lu", tolerances_used=tolerances, per_trial=counts,
                      agreement=len(freq) == 1, elapsed_ms=1000 * (time.perf_counter() - t0),
                      peak_mem_bytes=peak)


def matrix_rank(m: SparseSignMatrix, backend: str = "prime", **kw) -> RankResult:
    if backend == "prime":
        return rank_prime_field(m, **kw)
    if backend == "float":
        return rank_float_lu(m, **kw)
    raise ValueError(f"unknown backend {backend!r}")


def kernel_dim(m: SparseSignMatrix, r: RankResult) -> int:
    return m.ncols - r.rank
