"""Monomial syzygies and their dominant weights.

Work in the Artinian quotient R/(x_0^d, ..., x_n^d).  Fix a degree e and let f
be the lex-largest monomial of degree e that survives in the quotient.  Any
set of distinct degree-d quotient monomials m_1, ..., m_p with m_i f = 0 in
the quotient gives a cycle m_1 ^ ... ^ m_p (x) f of the Koszul strand in
homological degree p and row q, where e = qd + b.  Its torus weight is
f + m_1 + ... + m_p.

Not every such cycle survives in homology: x^2y ^ x^2z (x) x^2y^2 (d=3) is
the boundary of x^2y ^ x^2z ^ xy^2 (x) x.  :func:`e_space_weights` lists the
weights of all wedges; :func:`e_dominant_weights` keeps a weight only if some
wedge of that weight is not a boundary in the Artinian Koszul complex, decided
by an exact rank test over prime fields.  Only dominant weights are ever
tested, so the linear algebra stays at the unbalanced (small) strands.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from .core import GradedMultiset, Monomial, Partition, dominant_weights, monomial_basis


def lex_lead(e: int, d: int, n: int = 2) -> Monomial:
    """Lex-largest monomial of degree e in n+1 variables with exponents < d."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    cap = d - 1
    if e < 0 or e > (n + 1) * cap:
        raise ValueError(f"no monomial of degree {e} survives modulo the d-th powers (d={d}, n={n})")
    out = []
    rest = e
    for _ in range(n + 1):
        take = min(cap, rest)
        out.append(take)
        rest -= take
    return tuple(out)


def quotient_basis(d: int, n: int = 2) -> list[Monomial]:
    """Degree-d monomials that are nonzero modulo (x_0^d, ..., x_n^d)."""
    return [m for m in monomial_basis(n, d) if max(m) < d]


def annihilators(f: Monomial, d: int) -> list[Monomial]:
    """Degree-d quotient monomials m with m*f = 0 in the quotient, lex-descending."""
    f = tuple(f)
    if max(f, default=0) >= d:
        raise ValueError(f"{f} is zero modulo the {d}-th powers")
    n = len(f) - 1
    return [m for m in quotient_basis(d, n) if any(x + y >= d for x, y in zip(m, f))]


def _subset_weights(mons: list[Monomial], p: int, start) -> GradedMultiset:
    """Weights start + sum(W) over all p-subsets W of ``mons`` (with multiplicity)."""
    # layer[k] = {weight: count} over k-subsets of the monomials seen so far
    layer: list[dict] = [dict() for _ in range(p + 1)]
    layer[0][tuple(start)] = 1
    for m in mons:
        for k in range(min(p, len(mons)), 0, -1):
            src = layer[k - 1]
            if not src:
                continue
            dst = layer[k]
            for w, c in src.items():
                key = tuple(x + y for x, y in zip(w, m))
                dst[key] = dst.get(key, 0) + c
    return GradedMultiset(layer[p])


def e_space_weights(p: int, q: int, b: int, d: int, n: int = 2, f: Monomial | None = None) -> GradedMultiset:
    """Torus weights (with multiplicity) of the monomial syzygies in E_{p,q}(b;d).

    ``f`` defaults to the lex-leading surviving monomial of degree qd + b;
    passing another f is allowed for exploration only.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    e = q * d + b
    if f is None:
        try:
            f = lex_lead(e, d, n)
        except ValueError:
            return GradedMultiset()
    elif sum(f) != e:
        raise ValueError(f"cofactor {f} does not have degree {e}")
    mons = annihilators(f, d)
    if p > len(mons):
        return GradedMultiset()
    return _subset_weights(mons, p, f)


def sorted_dominant(weights) -> set[Partition]:
    """Dominant weights after moving every weight to its descending representative."""
    return dominant_weights({tuple(sorted(w, reverse=True)) for w in weights})


def _wedges_of_weight(mons: list[Monomial], p: int, target) -> list[tuple[Monomial, ...]]:
    """All p-subsets of ``mons`` summing to ``target``."""
    out = []
    stack: list[Monomial] = []

    def dfs(t, rest):
        if len(stack) == p:
            if not any(rest):
                out.append(tuple(stack))
            return
        for u in range(t, len(mons) - (p - len(stack)) + 1):
            m = mons[u]
            nxt = tuple(x - y for x, y in zip(rest, m))
            if min(nxt) >= 0:
                stack.append(m)
                dfs(u + 1, nxt)
                stack.pop()

    dfs(0, tuple(target))
    return out


def has_nonboundary(p: int, q: int, b: int, d: int, weight, f: Monomial, wedges, n: int = 2) -> bool:
    """True if some wedge (x) f of the given weight is not a boundary.

    The cycles live in the Artinian strand at ``weight``; they span a
    subspace outside the image of the next differential iff appending them
    as columns raises the rank.
    """
    from .koszul import StrandSpec, build_differential, strand_basis
    from .rank import rank_prime_field

    if not wedges:
        return False
    spec = StrandSpec(n, d, b, p, q, tuple(weight), artinian=True)
    basis = strand_basis(spec)
    index = {w: i for i, w in enumerate(basis)}
    pos = {m: i for i, m in enumerate(monomial_basis(n, d))}
    rows = []
    for wedge in wedges:
        key = tuple(sorted(pos[m] for m in wedge))
        if key not in index:
            raise AssertionError(f"{wedge} (x) {f} is not in the strand basis")
        rows.append(index[key])
    bnd = build_differential(spec.shifted(1))
    base = rank_prime_field(bnd).rank if bnd.nnz else 0
    k = bnd.ncols
    ext = type(bnd)(bnd.nrows, k + len(rows),
                    np.concatenate([bnd.rows, np.array(rows, dtype=np.int64)]),
                    np.concatenate([bnd.cols, np.arange(k, k + len(rows), dtype=np.int64)]),
                    np.concatenate([bnd.vals, np.ones(len(rows), dtype=np.int64)]))
    return rank_prime_field(ext).rank > base


def e_dominant_weights(p: int, q: int, b: int, d: int, n: int = 2, nonboundary: bool = True) -> set[Partition]:
    """Dominant weights of the monomial syzygies in E_{p,q}(b;d).

    With ``nonboundary`` (the default) a weight counts only if a wedge of that
    weight survives in homology; weights are replaced by their descending
    representatives before taking dominant elements.
    """
    weights = e_space_weights(p, q, b, d, n)
    if not nonboundary:
        return sorted_dominant(weights)
    groups: dict[Partition, list] = {}
    for w in weights:
        groups.setdefault(tuple(sorted(w, reverse=True)), []).append(w)
    f = lex_lead(q * d + b, d, n)
    mons = annihilators(f, d)
    confirmed: set = set()
    rejected: set = set()
    while True:
        dom = dominant_weights(set(groups) - rejected)
        todo = dom - confirmed
        if not todo:
            return dom
        for lam in todo:
            ok = any(
                has_nonboundary(p, q, b, d, w, f,
                                _wedges_of_weight(mons, p, tuple(x - y for x, y in zip(w, f))), n)
                for w in sorted(groups[lam], reverse=True))
            (confirmed if ok else rejected).add(lam)


@dataclass
class ConjectureVerdict:
    b: int
    d: int
    p: int
    q: int
    e_weights: set = field(default_factory=set)
    k_weights: set = field(default_factory=set)

    @property
    def match(self) -> bool:
        return self.e_weights == self.k_weights

    def record(self) -> str:
        """``b d p q verdict [diff]`` text record."""
        head = f"{self.b} {self.d} {self.p} {self.q}"
        if self.match:
            return f"{head} match"
        only_e = sorted(self.e_weights - self.k_weights, reverse=True)
        only_k = sorted(self.k_weights - self.e_weights, reverse=True)
        return f"{head} mismatch E-only={only_e} K-only={only_k}"


def check_dominant_conjecture(b: int, d: int, p: int, q: int, kdata, n: int = 2) -> ConjectureVerdict:
    """Compare dominant weights of E_{p,q} with those of a Schur decomposition of K_{p,q}.

    ``kdata`` is a :class:`~veronese_syzygies.schur.SchurDecomposition` or a
    {partition: multiplicity} mapping.
    """
    modules = getattr(kdata, "modules", kdata)
    k_dom = dominant_weights({lam for lam, m in modules.items() if m})
    return ConjectureVerdict(b, d, p, q, e_dominant_weights(p, q, b, d, n), k_dom)


def check_database(db, positions=None) -> list[ConjectureVerdict]:
    """Run the dominant-weight comparison on every nonzero position of a Betti database."""
    from .schur import decompose_position

    table = db.total_table()
    out = []
    for (p, q), v in sorted(table.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if not v or (positions is not None and (p, q) not in positions):
            continue
        dec = decompose_position(db, p, q)
        if not dec.residual_ok:
            raise ValueError(f"K_{{{p},{q}}}({db.b};{db.d}) does not decompose into Schur modules")
        out.append(check_dominant_conjecture(db.b, db.d, p, q, dec))
    return out


def write_verdicts(verdicts, path) -> Path:
    path = Path(path)
    path.write_text("".join(v.record() + "\n" for v in verdicts), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# the predicted last module of row one


def predicted_terminal_module(d: int) -> tuple[int, Partition]:
    """(p, (a, b, c)) with p = d*C(d+1,2) and
    (a, b, c) = (C(d+2,3) - 1, d(d^2+5)/6, C(d+1,3) - 1), evaluated literally."""
    if d < 1:
        raise ValueError("d must be positive")
    p = d * comb(d + 1, 2)
    mid, rem = divmod(d * (d * d + 5), 6)
    assert rem == 0  # d(d^2+5) = d^3 - d + 6d is always divisible by 6
    return p, (comb(d + 2, 3) - 1, mid, comb(d + 1, 3) - 1)


@dataclass
class TerminalReport:
    d: int
    predicted_p: int
    predicted_weight: Partition
    projective_dimension: int
    last_row1_p: int | None
    last_row1_modules: dict

    @property
    def p_consistent(self) -> bool:
        return self.last_row1_p == self.predicted_p

    @property
    def weight_total_consistent(self) -> bool:
        """Whether (a,b,c) has the total degree of K_{p,1} at the predicted p."""
        return sum(self.predicted_weight) == self.d * (self.predicted_p + 1)

    @property
    def module_consistent(self) -> bool:
        return self.last_row1_modules == {self.predicted_weight: 1}

    def lines(self) -> list[str]:
        mods = " + ".join(f"{m}*S{lam}" if m > 1 else f"S{lam}"
                          for lam, m in sorted(self.last_row1_modules.items(), reverse=True))
        return [
            f"d={self.d}",
            f"predicted p={self.predicted_p} weight={self.predicted_weight} "
            f"(total {sum(self.predicted_weight)}, total of K_(p,1) would be {self.d * (self.predicted_p + 1)})",
            f"projective dimension={self.projective_dimension}",
            f"last nonzero K_(p,1): p={self.last_row1_p} = {mods or '0'}",
            f"p consistent={self.p_consistent} weight total consistent={self.weight_total_consistent} "
            f"module consistent={self.module_consistent}",
        ]


def check_terminal_module(db) -> TerminalReport:
    """Compare :func:`predicted_terminal_module` with row 1 of a b=0 database."""
    from .schur import decompose_position

    if db.b != 0:
        raise ValueError("the prediction concerns b = 0")
    p_pred, w_pred = predicted_terminal_module(db.d)
    table = db.total_table()
    row1 = [p for (p, q), v in table.items() if q == 1 and v]
    last = max(row1) if row1 else None
    mods = decompose_position(db, last, 1).modules if last is not None else {}
    return TerminalReport(db.d, p_pred, w_pred, comb(db.d + 2, 2) - 3, last, dict(mods))
