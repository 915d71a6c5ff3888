"""Statistics of Betti tables: Boij-Soderberg decompositions, Betti
distributions and Q-Q data, unimodality and redundancy.

Betti tables here are mappings {(p, q): value}; homological degree p sits in
internal degree p + q.  Boij-Soderberg arithmetic is exact (Fraction).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Iterable, Mapping, Sequence


# ---------------------------------------------------------------------------
# pure diagrams and Boij-Soderberg decomposition


@dataclass(frozen=True)
class PureDiagram:
    degrees: tuple[int, ...]
    entries: dict  # (i, d_i) -> Fraction

    def __getitem__(self, key) -> Fraction:
        return self.entries.get(tuple(key), Fraction(0))


def pure_diagram(degrees: Sequence[int]) -> PureDiagram:
    """Betti table with entry prod_{j != i} 1/|d_i - d_j| at (i, d_i)."""
    degs = tuple(int(x) for x in degrees)
    if not degs:
        raise ValueError("empty degree sequence")
    if any(b <= a for a, b in zip(degs, degs[1:])):
        raise ValueError(f"degree sequence {degs} is not strictly increasing")
    entries = {}
    for i, di in enumerate(degs):
        den = 1
        for j, dj in enumerate(degs):
            if j != i:
                den *= abs(di - dj)
        entries[(i, di)] = Fraction(1, den)
    return PureDiagram(degs, entries)


@dataclass
class PureDecomposition:
    parts: list = field(default_factory=list)  # [(degrees, Fraction)]

    @property
    def coefficients(self) -> list[Fraction]:
        return [c for _, c in self.parts]

    def reconstruct(self) -> dict:
        """Sum of coefficient * pure diagram, keyed by (i, degree)."""
        out: dict = {}
        for degs, c in self.parts:
            for key, v in pure_diagram(degs).entries.items():
                out[key] = out.get(key, Fraction(0)) + c * v
        return {k: v for k, v in out.items() if v}

    def is_chain(self) -> bool:
        return all(all(x <= y for x, y in zip(a, b)) for (a, _), (b, _) in zip(self.parts, self.parts[1:]))

    def lines(self) -> list[str]:
        return [" ".join(map(str, degs)) + f" {c.numerator}/{c.denominator}" for degs, c in self.parts]


def to_graded(table: Mapping) -> dict:
    """{(p, q): v} -> {(p, p + q): v}, dropping zeros."""
    return {(p, p + q): v for (p, q), v in table.items() if v}


def bs_decompose(table: Mapping, graded: bool = False) -> PureDecomposition:
    """Greedy Boij-Soderberg decomposition of a Cohen-Macaulay Betti table.

    ``table`` is {(p, q): beta} (or {(i, j): beta_{i,j}} with ``graded``).
    Each step takes the degree sequence of minimal nonzero degrees in every
    homological position, subtracts the largest multiple of its pure diagram
    that keeps all entries nonnegative, and repeats.
    """
    rest = {k: Fraction(v) for k, v in (table if graded else to_graded(table)).items() if v}
    if any(v < 0 for v in rest.values()):
        raise ValueError("Betti numbers must be nonnegative")
    out = PureDecomposition()
    while rest:
        length = max(i for i, _ in rest) + 1
        degs = []
        for i in range(length):
            js = [j for (ii, j) in rest if ii == i]
            if not js:
                raise ValueError(f"homological position {i} is empty; table is not Cohen-Macaulay")
            degs.append(min(js))
        pd = pure_diagram(degs)  # raises if not strictly increasing
        c = min(rest[k] / v for k, v in pd.entries.items())
        out.parts.append((tuple(degs), c))
        for k, v in pd.entries.items():
            r = rest[k] - c * v
            if r < 0:
                raise ValueError(f"negative residual at {k}")
            if r:
                rest[k] = r
            else:
                del rest[k]
    return out


# ---------------------------------------------------------------------------
# Betti distributions


@dataclass
class BettiDistribution:
    offset: int            # p of the first nonzero entry
    raw: list[int]
    probs: list[float]
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


def moments_direct(probs: Sequence[float], support: Sequence[float] | None = None) -> tuple[float, float, float, float]:
    """(mean, variance, skewness, excess kurtosis) by direct summation."""
    xs = list(range(len(probs))) if support is None else list(support)
    total = math.fsum(probs)
    mean = math.fsum(w * x for w, x in zip(probs, xs)) / total
    m2 = math.fsum(w * (x - mean) ** 2 for w, x in zip(probs, xs)) / total
    m3 = math.fsum(w * (x - mean) ** 3 for w, x in zip(probs, xs)) / total
    m4 = math.fsum(w * (x - mean) ** 4 for w, x in zip(probs, xs)) / total
    if m2 <= 0 or m2 * m2 == 0:  # degenerate, or so small that the ratios underflow
        return mean, max(m2, 0.0), math.nan, math.nan
    return mean, m2, m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0


def moments_streaming(probs: Sequence[float], support: Sequence[float] | None = None) -> tuple[float, float, float, float]:
    """Same as :func:`moments_direct`, in one pass (weighted merge updates)."""
    xs = range(len(probs)) if support is None else support
    n = mean = m2 = m3 = m4 = 0.0
    for x, w in zip(xs, probs):
        if not w:
            continue
        n0 = n
        n += w
        delta = x - mean
        m4 += (delta ** 4 * n0 * w * (n0 * n0 - n0 * w + w * w) / n ** 3
               + 6 * delta ** 2 * w * w * m2 / n ** 2 - 4 * delta * w * m3 / n)
        m3 += delta ** 3 * n0 * w * (n0 - w) / n ** 2 - 3 * delta * w * m2 / n
        m2 += delta ** 2 * n0 * w / n
        mean += delta * w / n
    var = m2 / n
    if var <= 0 or var * var == 0:
        return mean, max(var, 0.0), math.nan, math.nan
    return mean, var, (m3 / n) / var ** 1.5, (m4 / n) / var ** 2 - 3.0


def betti_distribution(row: Sequence[int] | Mapping) -> BettiDistribution:
    """Normalize a Betti table row to a probability distribution starting at 0.

    ``row`` is a sequence indexed by p or a {p: value} mapping.
    """
    if isinstance(row, Mapping):
        items = sorted((int(p), int(v)) for p, v in row.items())
    else:
        items = list(enumerate(int(v) for v in row))
    nz = [p for p, v in items if v]
    if not nz:
        raise ValueError("row is zero")
    lo, hi = min(nz), max(nz)
    vals = dict(items)
    raw = [vals.get(p, 0) for p in range(lo, hi + 1)]
    total = sum(raw)
    probs = [v / total for v in raw]
    mean, var, skew, kurt = moments_direct(probs)
    return BettiDistribution(lo, raw, probs, mean, var, skew, kurt)


def table_row(table: Mapping, q: int) -> dict:
    return {p: v for (p, qq), v in table.items() if qq == q}


def qq_data(dist, trim_head: int = 0, trim_tail: int = 0, fit: tuple[float, float] | None = None) -> list[tuple[float, float]]:
    """Q-Q pairs (normal quantile, empirical quantile) against a normal fit.

    ``dist`` is a :class:`BettiDistribution`, a sequence of probabilities on
    0, 1, 2, ..., or a (support, weights) pair.  The first ``trim_head`` and
    last ``trim_tail`` support points are dropped and the rest renormalized.
    The normal is moment matched unless ``fit = (mean, sd)`` is given.  Each
    support point x_k is paired with the normal quantile at the midpoint of
    its cumulative probability step.
    """
    if isinstance(dist, BettiDistribution):
        support, weights = list(range(len(dist.probs))), list(dist.probs)
    elif isinstance(dist, tuple) and len(dist) == 2 and not isinstance(dist[0], (int, float)):
        support, weights = list(dist[0]), list(dist[1])
    else:
        support, weights = list(range(len(dist))), list(dist)
    if trim_head < 0 or trim_tail < 0:
        raise ValueError("trim counts must be nonnegative")
    end = len(support) - trim_tail
    support, weights = support[trim_head:end], weights[trim_head:end]
    if len(support) < 3:
        raise ValueError("trimming leaves fewer than 3 points")
    order = sorted(range(len(support)), key=lambda i: support[i])
    support = [support[i] for i in order]
    weights = [float(weights[i]) for i in order]
    total = math.fsum(weights)
    if total <= 0:
        raise ValueError("weights must have positive total")
    weights = [w / total for w in weights]
    if fit is None:
        mean, var, _, _ = moments_direct(weights, support)
        if not var > 1e-300:
            raise ValueError("distribution has zero variance")
        fit = (mean, math.sqrt(var))
    mu, sd = fit
    if sd <= 0:
        raise ValueError("normal fit needs a positive standard deviation")
    normal = NormalDist(mu, sd)
    out = []
    cum = 0.0
    for x, w in zip(support, weights):
        mid = min(max(cum + w / 2, 1e-300), 1 - 1e-16)
        out.append((normal.inv_cdf(mid), float(x)))
        cum += w
    return out


def write_tsv(pairs: Iterable[tuple], path) -> None:
    from pathlib import Path

    Path(path).write_text("".join(f"{x!r}\t{y!r}\n" for x, y in pairs), encoding="utf-8")


# ---------------------------------------------------------------------------
# unimodality and redundancy


def is_unimodal(seq: Sequence) -> bool:
    """True iff the sequence is weakly increasing and then weakly decreasing."""
    seq = list(seq)
    i = 1
    while i < len(seq) and seq[i] >= seq[i - 1]:
        i += 1
    while i < len(seq) and seq[i] <= seq[i - 1]:
        i += 1
    return i >= len(seq)


def redundancy_ratio(table: Mapping, p: int, q: int) -> Fraction:
    """|1 - beta_{p,q} / beta_{p-1,q+1}| as an exact fraction."""
    den = table.get((p - 1, q + 1), 0)
    if not den:
        raise ZeroDivisionError(f"beta_({p - 1},{q + 1}) is zero")
    return abs(1 - Fraction(table.get((p, q), 0), den))


def most_redundant(table: Mapping) -> tuple[tuple[int, int], Fraction] | None:
    """Position with the smallest redundancy ratio among nonzero diagonal pairs."""
    best = None
    for (p, q), v in sorted(table.items()):
        if v and table.get((p - 1, q + 1), 0):
            r = redundancy_ratio(table, p, q)
            if best is None or r < best[1]:
                best = ((p, q), r)
    return best


def redundant_schur(decompositions: Mapping) -> list[tuple[tuple[int, ...], list[tuple[int, int]]]]:
    """Partitions occurring in both K_{p,q} and K_{p-1,q+1}.

    ``decompositions`` maps (p, q) to {partition: multiplicity} (or to a
    SchurDecomposition).  Returns (partition, [(p, q), (p-1, q+1)]) entries,
    sorted by position and then partition, descending.
    """
    mods = {pq: getattr(v, "modules", v) for pq, v in decompositions.items()}
    out = []
    for (p, q), here in sorted(mods.items()):
        there = mods.get((p - 1, q + 1))
        if not there:
            continue
        for lam in sorted(set(here) & set(there), reverse=True):
            if here[lam] and there[lam]:
                out.append((lam, [(p, q), (p - 1, q + 1)]))
    return out
