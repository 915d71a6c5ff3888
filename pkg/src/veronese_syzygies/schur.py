"""Schur characters and the highest-weight decomposition of multigraded data.

A GL_{n+1}-representation is determined by its character, a symmetric
polynomial.  Its lex-leading weight is always the highest weight of an
irreducible summand, so repeatedly peeling off the character of that summand
recovers the decomposition.  If the data were corrupted (e.g. by a wrong
rank), the peeling eventually meets a negative coefficient, which is
reported instead of being repaired.

Characters are computed by branching: restricting S_lambda from n+1 to n
variables gives every mu interlacing lambda, with the last variable carrying
|lambda| - |mu|.  This enumerates semistandard tableaux by content using only
integer additions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import prod
from pathlib import Path

from .core import GradedMultiset, Partition, dominant_weights, is_partition


@lru_cache(maxsize=None)
def _character(lam: Partition, nvars: int) -> tuple:
    if nvars == 1:
        return (((lam[0],), 1),)
    total = sum(lam)
    ranges = [range(lam[i + 1], lam[i] + 1) for i in range(nvars - 1)]
    out: dict[tuple, int] = {}
    for mu in product(*ranges):
        last = total - sum(mu)
        for w, c in _character(tuple(mu), nvars - 1):
            key = w + (last,)
            out[key] = out.get(key, 0) + c
    return tuple(sorted(out.items(), reverse=True))


def schur_character(lam, nvars: int = 3) -> GradedMultiset:
    """Weight multiplicities (Kostka numbers) of S_lambda(C^nvars)."""
    lam = tuple(int(x) for x in lam)
    if not is_partition(lam):
        raise ValueError(f"{lam} is not a partition")
    nonzero = [x for x in lam if x]
    if len(nonzero) > nvars:
        raise ValueError(f"{lam} has more than {nvars} parts")
    lam = tuple(nonzero) + (0,) * (nvars - len(nonzero))
    return GradedMultiset(dict(_character(lam, nvars)))


def weyl_dimension(lam) -> int:
    """dim S_lambda(C^n) = prod_{i<j} (lam_i - lam_j + j - i) / (j - i)."""
    lam = tuple(lam)
    n = len(lam)
    num = prod(lam[i] - lam[j] + j - i for i in range(n) for j in range(i + 1, n))
    den = prod(j - i for i in range(n) for j in range(i + 1, n))
    return num // den


def bialternant_character(lam, nvars: int = 3) -> GradedMultiset:
    """Character via a_{lam+delta}/a_delta using exact polynomial division.

    Slow; used only to cross-check :func:`schur_character`.
    """
    import sympy

    xs = sympy.symbols(f"x0:{nvars}")
    lam = tuple(lam) + (0,) * (nvars - len(lam))
    delta = [nvars - 1 - i for i in range(nvars)]
    num = sympy.Matrix(nvars, nvars, lambda i, j: xs[j] ** (lam[i] + delta[i])).det()
    den = sympy.Matrix(nvars, nvars, lambda i, j: xs[j] ** delta[i]).det()
    q, r = sympy.div(sympy.expand(num), sympy.expand(den), *xs)
    assert r == 0
    poly = sympy.Poly(q, *xs)
    return GradedMultiset({tuple(int(e) for e in m): int(c) for m, c in poly.terms()})


@dataclass
class SchurDecomposition:
    modules: dict = field(default_factory=dict)  # partition -> multiplicity
    residual_ok: bool = True
    residual: GradedMultiset = field(default_factory=GradedMultiset)

    def dimension(self) -> int:
        return sum(m * weyl_dimension(lam) for lam, m in self.modules.items())

    def total_modules(self) -> int:
        return sum(self.modules.values())

    def lines(self) -> list[str]:
        return [" ".join(map(str, lam)) + f" {m}" for lam, m in sorted(self.modules.items(), reverse=True)]

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8")
        return path


def greedy_decompose(H, nvars: int = 3) -> SchurDecomposition:
    """Peel off Schur characters at the lex-leading weight until nothing is left.

    Stops with ``residual_ok=False`` when the lex-leading coefficient is
    negative or its weight is not a partition; the modules found so far are
    kept and the remainder is returned in ``residual``.
    """
    rest = GradedMultiset(H)
    totals = rest.totals()
    if len(totals) > 1:
        raise ValueError(f"H mixes total degrees {sorted(totals)}")
    out = SchurDecomposition()
    while rest:
        lam = rest.lex_leading()
        c = rest[lam]
        if c < 0 or not is_partition(lam):
            out.residual_ok = False
            out.residual = rest
            return out
        out.modules[lam] = out.modules.get(lam, 0) + c
        for w, k in schur_character(lam, nvars).items():
            v = rest.get(w, 0) - c * k
            if v:
                rest[w] = v
            else:
                rest.pop(w, None)
        if any(v < 0 for v in rest.values()):
            out.residual_ok = False
            out.residual = rest
            return out
    return out


def character_of(modules: dict, nvars: int = 3) -> GradedMultiset:
    """Sum of multiplicity * character over a {partition: multiplicity} map."""
    out = GradedMultiset()
    for lam, m in modules.items():
        for w, k in schur_character(lam, nvars).items():
            out[w] = out.get(w, 0) + m * k
    return out.clean()


def decomposition_dominant_weights(dec: SchurDecomposition) -> set:
    return dominant_weights(dec.modules)


def kpq_dominant_weights(db, p: int, q: int) -> set:
    """Dominant weights of K_{p,q} from the data stored in a Betti database."""
    hs = db.hilbert_series(p, q)
    if not hs:
        return set()
    return decomposition_dominant_weights(greedy_decompose(hs))


def decompose_position(db, p: int, q: int) -> SchurDecomposition:
    return greedy_decompose(db.hilbert_series(p, q))


def count_stats(db, q: int, ps=None) -> dict[str, list[int]]:
    """Per-p statistics of row q: rank, distinct modules, modules counted with
    multiplicity, largest multiplicity and number of dominant weights."""
    if ps is None:
        ps = sorted({p for p, a in db.multigraded if db.q_of(p, a) == q})
    keys = ("rank", "distinct", "with_multiplicity", "max_multiplicity", "dominant")
    out: dict[str, list[int]] = {k: [] for k in keys}
    out["p"] = list(ps)
    for p in ps:
        dec = decompose_position(db, p, q)
        if not dec.residual_ok:
            raise ValueError(f"K_{{{p},{q}}} does not decompose into Schur modules")
        out["rank"].append(dec.dimension())
        out["distinct"].append(len(dec.modules))
        out["with_multiplicity"].append(dec.total_modules())
        out["max_multiplicity"].append(max(dec.modules.values(), default=0))
        out["dominant"].append(len(decomposition_dominant_weights(dec)))
    return out


def read_decomposition(path) -> dict:
    """{partition: multiplicity} from a ``l0 l1 l2 mult`` file ('#' comments allowed)."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        nums = [int(x) for x in parts if x.lstrip("-").isdigit()]
        out[tuple(nums[:-1])] = nums[-1]
    return out
