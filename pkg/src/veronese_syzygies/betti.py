"""Multigraded and total Betti numbers of S(b;d) from strand ranks.

At a fixed multidegree a the Koszul complex is a finite complex

    ... -> C_{k+1} -> C_k -> C_{k-1} -> ...,   C_k = (L^k S_d (x) S_{|a|-dk})_a,

and beta_{k,a} = dim C_k - rank d_k - rank d_{k+1}.  When some positions are
known to have zero homology, ranks propagate through them
(rank d_{k+1} = dim C_k - rank d_k), so only the maps between positions
that may carry homology have to be computed.  For an adjacent pair of
possibly nonzero positions that is a single matrix.

Data for one (b, d) lives in a :class:`BettiDatabase`; only S_3-canonical
(weakly decreasing) multidegrees are stored.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, Iterable

from .core import GradedMultiset, canonical_multidegrees, orbit, orbit_size, sort_multidegree
from .hilbert import (
    IntegrityError,
    ambiguous_pairs,
    betti_from_numerator,
    candidates,
    nonvanishing_table,
    numerator,
    relevant_range,
)
from .koszul import StrandSpec, build_differential, differential_shape, strand_basis, strand_dimension
from .rank import RankResult, matrix_rank

PROVENANCE = ("rank_computed", "hilbert_derived", "symmetry", "duality")


class IncompleteDatabaseError(LookupError):
    pass


# ---------------------------------------------------------------------------
# duality


@dataclass(frozen=True)
class DualityRule:
    d: int
    b: int
    r: int
    b_dual: int
    s: int

    def __call__(self, p: int, q: int) -> tuple[int, int]:
        return self.r - p, 3 - q - self.s

    def map_table(self, table: dict) -> dict:
        """Betti table of S(b';d) from that of S(b;d), as {(p, q): value}."""
        return {self(p, q): v for (p, q), v in table.items()}


def dual_rule(b: int, d: int) -> DualityRule:
    """beta_{p,q}(b;d) = beta_{r-p, 3-q-s}(b';d) with b' = (-3-b) mod d."""
    if not 0 <= b < d:
        raise ValueError(f"need 0 <= b < d, got b={b}, d={d}")
    bd = (-3 - b) % d
    s, rem = divmod(bd + 3 + b, d)
    assert rem == 0
    return DualityRule(d, b, comb(d + 2, 2) - 3, bd, s)


# ---------------------------------------------------------------------------
# strand complexes


def strand_spec(b: int, d: int, k: int, a, artinian: bool = False) -> StrandSpec:
    total = sum(a)
    return StrandSpec(2, d, b, k, (total - b) // d - k, tuple(a), artinian)


def complex_dims(b: int, d: int, a, artinian: bool = False) -> dict[int, int]:
    """{k: dim C_k} over every k with a nonnegative cofactor degree."""
    total = sum(a)
    if (total - b) % d:
        raise ValueError(f"|a| = {total} is not b mod d")
    out = {}
    for k in range(0, (total - b) // d + 1):
        spec = strand_spec(b, d, k, a, artinian)
        if artinian and spec.cofactor_degree > 3 * (d - 1):
            out[k] = 0
            continue
        out[k] = strand_dimension(spec)
    return out


def _propagate(dims: dict[int, int], ranks: dict[int, int], exact_at: set[int]) -> dict[int, int]:
    """Fill in ranks implied by exactness at the positions in ``exact_at``."""
    ranks = dict(ranks)
    top = max(dims) if dims else 0
    ranks.setdefault(0, 0)
    ranks.setdefault(top + 1, 0)
    for k in dims:  # maps touching a zero space vanish
        if dims[k] == 0:
            ranks.setdefault(k, 0)
            ranks.setdefault(k + 1, 0)
    changed = True
    while changed:
        changed = False
        for k in exact_at:
            if k not in dims:
                continue
            lo, hi = ranks.get(k), ranks.get(k + 1)
            if lo is not None and hi is None:
                ranks[k + 1] = dims[k] - lo
                changed = True
            elif hi is not None and lo is None:
                ranks[k] = dims[k] - hi
                changed = True
    return ranks


def ranks_needed(dims: dict[int, int], homology_at: Iterable[int] | None,
                 positions: Iterable[int]) -> list[int]:
    """Indices k of the maps d_k whose ranks must be computed.

    ``homology_at`` lists the positions that may carry homology; exactness
    is used everywhere else.  ``None`` means no exactness is assumed.  The
    result covers both maps around each of ``positions``.
    """
    exact = set() if homology_at is None else set(dims) - set(homology_at)
    ranks = _propagate(dims, {}, exact)
    wanted = {k for k in positions} | {k + 1 for k in positions}
    return sorted(k for k in wanted if k not in ranks)


def strand_homology(dims: dict[int, int], ranks: dict[int, int], homology_at: Iterable[int] | None,
                    positions: Iterable[int] | None = None) -> dict[int, int]:
    """beta_k = dim C_k - rank d_k - rank d_{k+1} at the requested positions."""
    exact = set() if homology_at is None else set(dims) - set(homology_at)
    full = _propagate(dims, ranks, exact)
    out = {}
    for k in (positions if positions is not None else (homology_at or dims)):
        if k not in dims:
            continue
        if k not in full or k + 1 not in full:
            raise IncompleteDatabaseError(f"rank of d_{k} or d_{k + 1} unknown")
        beta = dims[k] - full[k] - full[k + 1]
        if beta < 0:
            raise IntegrityError(f"negative homology {beta} at k={k} (rank error)")
        out[k] = beta
    return out


def strand_betti(spec: StrandSpec, rank_p: RankResult, rank_p1: RankResult, ncols: int | None = None) -> int:
    """dim ker d_{p,a} - rank d_{p+1,a}; raises on a negative value."""
    if ncols is None:
        ncols = differential_shape(spec)[1]
    beta = ncols - rank_p.rank - rank_p1.rank
    if beta < 0:
        raise IntegrityError(f"negative Betti number {beta} for {spec.tag}")
    return beta


# ---------------------------------------------------------------------------
# rank tasks


@dataclass(frozen=True)
class RankTask:
    """One differential d_k at one canonical multidegree."""

    spec: StrandSpec  # source strand of the map
    rows: int
    cols: int

    @property
    def id(self) -> str:
        return hashlib.sha1(f"{self.spec.tag}|d{self.spec.p}".encode()).hexdigest()[:16]

    @property
    def area(self) -> int:
        return self.rows * self.cols


@dataclass
class StrandJob:
    """The rank tasks one multidegree needs and how to turn ranks into Betti numbers."""

    b: int
    d: int
    a: tuple
    dims: dict
    homology_at: list | None
    positions: list
    tasks: list = field(default_factory=list)


def _job(b, d, a, homology_at, positions, artinian) -> StrandJob:
    dims = complex_dims(b, d, a, artinian)
    job = StrandJob(b, d, tuple(a), dims, homology_at, positions)
    for k in ranks_needed(dims, homology_at, positions):
        spec = strand_spec(b, d, k, a, artinian)
        if artinian:
            cols = dims.get(k, 0)
            rows = dims.get(k - 1, 0)
        else:
            rows, cols = differential_shape(spec)
        if rows and cols:
            job.tasks.append(RankTask(spec, rows, cols))
    return job


def strand_jobs(b: int, d: int, *, shortcut: bool = True, artinian: bool = False,
                positions: Iterable[tuple[int, int]] | None = None) -> list[StrandJob]:
    """Per-multidegree work needed for the Betti table of S(b;d).

    With ``shortcut`` only the adjacent relevant pairs are covered (the rest
    comes from the Hilbert numerator) and exactness is used at every position
    the nonvanishing table rules out.  Without it every position with
    q in {0,1,2} is covered with both maps computed.  ``positions`` restricts
    the positions considered.
    """
    jobs = []
    if shortcut:
        table = nonvanishing_table(b, d)
        for p, q in ambiguous_pairs(b, d):
            if positions is not None and (p, q) not in positions and (p - 1, q + 1) not in positions:
                continue
            total = d * (p + q) + b
            hom = [k for k, _ in candidates(table, total)]
            for a in canonical_multidegrees(2, total):
                jobs.append(_job(b, d, a, hom, [p, p - 1], artinian))
        return jobs
    r = comb(d + 2, 2) - 3
    wanted = positions if positions is not None else [(p, q) for q in (0, 1, 2) for p in range(r + 1)]
    by_total: dict[int, list[int]] = {}
    for p, q in wanted:
        by_total.setdefault(d * (p + q) + b, []).append(p)
    for total, ps in sorted(by_total.items()):
        for a in canonical_multidegrees(2, total):
            jobs.append(_job(b, d, a, None, sorted(ps), artinian))
    return jobs


def unique_tasks(jobs: Iterable[StrandJob]) -> list[RankTask]:
    seen: dict[str, RankTask] = {}
    for job in jobs:
        for t in job.tasks:
            seen.setdefault(t.id, t)
    return list(seen.values())


def solve_job(job: StrandJob, ranks: dict[str, int]) -> dict[int, int]:
    """{p: beta_{p,a}} for the job's positions given task ranks by id."""
    by_k = {t.spec.p: ranks[t.id] for t in job.tasks}
    return strand_homology(job.dims, by_k, job.homology_at, job.positions)


# ---------------------------------------------------------------------------
# database


@dataclass
class BettiDatabase:
    """Betti data for S(b;d) over P^2.

    ``multigraded`` maps (p, canonical a) -> beta; ``totals`` holds (p, q)
    values that are known without multigraded detail (from duality);
    ``complete`` lists the positions whose multigraded data are complete.
    """

    b: int
    d: int
    multigraded: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    total_provenance: dict = field(default_factory=dict)
    complete: set = field(default_factory=set)

    def q_of(self, p: int, a) -> int:
        return (sum(a) - self.b) // self.d - p

    def set(self, p: int, a, value: int, source: str):
        if source not in PROVENANCE:
            raise ValueError(f"unknown provenance {source}")
        if value < 0:
            raise IntegrityError(f"negative Betti number at p={p}, a={a}")
        canon, _ = sort_multidegree(a)
        key = (p, canon)
        if value:
            self.multigraded[key] = int(value)
            self.provenance[key] = source
        else:
            self.multigraded.pop(key, None)
            self.provenance.pop(key, None)

    def get(self, p: int, a) -> int:
        return self.multigraded.get((p, sort_multidegree(a)[0]), 0)

    def hilbert_series(self, p: int, q: int) -> GradedMultiset:
        """All multidegrees of K_{p,q}, orbits expanded."""
        out = GradedMultiset()
        for (pp, a), v in self.multigraded.items():
            if pp == p and self.q_of(pp, a) == q:
                for w in orbit(a):
                    out[w] = v
        return out

    def position_total(self, p: int, q: int) -> int:
        if (p, q) in self.complete:
            return sum(v * orbit_size(a) for (pp, a), v in self.multigraded.items()
                       if pp == p and self.q_of(pp, a) == q)
        if (p, q) in self.totals:
            return self.totals[(p, q)]
        raise IncompleteDatabaseError(f"no data for position ({p},{q}) of (b={self.b}, d={self.d})")

    def total_table(self) -> dict[tuple[int, int], int]:
        """{(p, q): beta_{p,p+q}} over every position the nonvanishing table allows.

        Positions the table rules out are reported as 0 only if known.
        """
        table = nonvanishing_table(self.b, self.d)
        missing = [pq for pq in sorted(table.positions()) if pq not in self.complete and pq not in self.totals]
        if missing:
            raise IncompleteDatabaseError(f"missing positions {missing} for (b={self.b}, d={self.d})")
        out = {pq: self.position_total(*pq) for pq in table.positions()}
        for pq in self.complete | set(self.totals):
            out.setdefault(pq, self.position_total(*pq))
        return out

    # -- persistence -------------------------------------------------------

    def directory(self, root) -> Path:
        return Path(root) / "data" / "n2" / f"d{self.d}" / f"b{self.b}"

    def save(self, root) -> Path:
        out = self.directory(root)
        out.mkdir(parents=True, exist_ok=True)
        keys = sorted(self.multigraded, key=lambda k: (k[0], tuple(-x for x in k[1])))
        _atomic_write(out / "multigraded.txt",
                      [f"{p} {a[0]} {a[1]} {a[2]} {self.multigraded[(p, a)]}" for p, a in keys])
        _atomic_write(out / "provenance.txt",
                      [f"{p} {a[0]} {a[1]} {a[2]} {self.provenance[(p, a)]}" for p, a in keys])
        _atomic_write(out / "totals.txt",
                      [f"{p} {q} {v} {self.total_provenance.get((p, q), 'duality')}"
                       for (p, q), v in sorted(self.totals.items())])
        _atomic_write(out / "complete.txt", [f"{p} {q}" for p, q in sorted(self.complete)])
        try:
            _atomic_write(out / "betti.csv", betti_csv(self.total_table()).splitlines())
        except IncompleteDatabaseError:
            pass
        return out

    @classmethod
    def load(cls, root, b: int, d: int) -> "BettiDatabase":
        db = cls(b, d)
        base = db.directory(root)
        if not base.exists():
            return db

        def read(name):
            f = base / name
            return [ln.split() for ln in f.read_text(encoding="utf-8").splitlines() if ln.strip()] if f.exists() else []

        prov = {(int(x[0]), (int(x[1]), int(x[2]), int(x[3]))): x[4] for x in read("provenance.txt")}
        for x in read("multigraded.txt"):
            key = (int(x[0]), (int(x[1]), int(x[2]), int(x[3])))
            db.multigraded[key] = int(x[4])
            db.provenance[key] = prov.get(key, "rank_computed")
        for x in read("totals.txt"):
            db.totals[(int(x[0]), int(x[1]))] = int(x[2])
            db.total_provenance[(int(x[0]), int(x[1]))] = x[3]
        db.complete = {(int(x[0]), int(x[1])) for x in read("complete.txt")}
        return db


def _atomic_write(path: Path, lines: list[str]):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
    tmp.replace(path)


def betti_csv(table: dict) -> str:
    """CSV with one row per q and one column per p (header ``q,p0,p1,...``)."""
    if not table:
        return "q\n"
    pmax = max(p for p, _ in table)
    qs = sorted({q for _, q in table} | {0, 1, 2})
    lines = ["q," + ",".join(str(p) for p in range(pmax + 1))]
    for q in qs:
        lines.append(f"{q}," + ",".join(str(table.get((p, q), 0)) for p in range(pmax + 1)))
    return "\n".join(lines) + "\n"


def format_table(table: dict) -> str:
    """Betti table in the usual layout, '-' for zero."""
    if not table:
        return ""
    pmax = max(p for p, _ in table)
    qmax = max(q for _, q in table if table[(_, q)]) if any(table.values()) else 0
    width = max(len(str(v)) for v in table.values())
    rows = []
    for q in range(qmax + 1):
        cells = [str(table.get((p, q), 0)) if table.get((p, q), 0) else "-" for p in range(pmax + 1)]
        rows.append(f"{q}: " + " ".join(c.rjust(width) for c in cells))
    return "\n".join(rows)


def multigraded_lines(db: BettiDatabase) -> list[str]:
    """`p a0 a1 a2 beta` for every multidegree (orbits expanded), sorted."""
    out = []
    for (p, a), v in db.multigraded.items():
        for w in orbit(a):
            out.append((p, w, v))
    out.sort(key=lambda t: (t[0], tuple(-x for x in t[1])))
    return [f"{p} {w[0]} {w[1]} {w[2]} {v}" for p, w, v in out]


# ---------------------------------------------------------------------------
# assembly


def fill_from_numerator(db: BettiDatabase) -> None:
    """Store everything the Hilbert numerator determines (outside the relevant range)."""
    rr = relevant_range(db.b, db.d)
    data = betti_from_numerator(db.b, db.d, rr)
    for (p, q), hs in data.items():
        for a, v in hs.items():
            if tuple(sorted(a, reverse=True)) == a:
                db.set(p, a, v, "hilbert_derived")
        db.complete.add((p, q))


def record_job(db: BettiDatabase, job: StrandJob, ranks: dict[str, int]) -> None:
    betti = solve_job(job, ranks)
    for p, v in betti.items():
        db.set(p, job.a, v, "rank_computed")


def mark_complete(db: BettiDatabase, jobs: Iterable[StrandJob]) -> None:
    """Mark every position covered by the jobs as complete."""
    totals_by_p: dict[int, set] = {}
    for job in jobs:
        for p in job.positions:
            totals_by_p.setdefault(p, set()).add(sum(job.a))
    for p, totals in totals_by_p.items():
        for t in totals:
            db.complete.add((p, (t - db.b) // db.d - p))


def compute_betti(b: int, d: int, *, shortcut: bool = True, artinian: bool = False,
                  backend: str = "prime", positions=None, db: BettiDatabase | None = None,
                  rank_fn: Callable | None = None, **rank_kw) -> BettiDatabase:
    """In-process computation of the Betti data of S(b;d).

    ``rank_fn(task) -> int`` overrides how ranks are obtained (used by the
    job runner); by default each matrix is built and ranked here.
    """
    db = db or BettiDatabase(b, d)
    jobs = strand_jobs(b, d, shortcut=shortcut, artinian=artinian, positions=positions)
    if shortcut and positions is None:
        fill_from_numerator(db)
    if rank_fn is None:
        def rank_fn(task):
            return matrix_rank(build_differential(task.spec), backend=backend, **rank_kw).rank
    ranks = {t.id: rank_fn(t) for t in unique_tasks(jobs)}
    for job in jobs:
        record_job(db, job, ranks)
    mark_complete(db, jobs)
    return db


def compute_position(b: int, d: int, p: int, q: int, *, artinian: bool = True, **kw) -> BettiDatabase:
    """Multigraded data of the single position (p, q), computed from ranks."""
    return compute_betti(b, d, shortcut=False, artinian=artinian, positions=[(p, q)], **kw)


def apply_duality(source: BettiDatabase) -> BettiDatabase:
    """Total Betti table of the dual module S(b';d) from a complete source."""
    rule = dual_rule(source.b, source.d)
    dual = BettiDatabase(rule.b_dual, source.d)
    for (p, q), v in source.total_table().items():
        dp, dq = rule(p, q)
        if dp >= 0 and 0 <= dq:
            dual.totals[(dp, dq)] = v
            dual.total_provenance[(dp, dq)] = "duality"
    return dual


def hilbert_crosscheck(db: BettiDatabase) -> list[tuple]:
    """Multidegrees where sum_p (-1)^p beta_{p,a} differs from the numerator.

    Returns (a, expected, found) triples over canonical multidegrees.
    """
    A = numerator(db.b, db.d)
    found: dict[tuple, int] = {}
    for (p, a), v in db.multigraded.items():
        found[a] = found.get(a, 0) + (-1) ** p * v
    expected = {a: c for a, c in A.terms.items() if tuple(sorted(a, reverse=True)) == a}
    out = []
    for a in sorted(set(found) | set(expected), reverse=True):
        if found.get(a, 0) != expected.get(a, 0):
            out.append((a, expected.get(a, 0), found.get(a, 0)))
    return out


# ---------------------------------------------------------------------------
# shipped reference tables


def golden_path(name: str) -> Path:
    """Path of a reference file shipped in the ``golden`` package directory."""
    path = Path(__file__).with_name("golden") / name
    if not path.exists():
        raise FileNotFoundError(f"no shipped reference file {name!r}")
    return path


def read_table_file(path) -> dict[tuple[int, int], int]:
    """{(p, q): value} from a whitespace table with one line per q ('#' comments)."""
    table = {}
    rows = [ln.split("#")[0].split() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    for q, row in enumerate(r for r in rows if r):
        for p, v in enumerate(row):
            if int(v):
                table[(p, q)] = int(v)
    return table


def golden_table(b: int, d: int) -> dict[tuple[int, int], int]:
    return read_table_file(golden_path(f"betti_d{d}_b{b}.txt"))


def table_diff(found: dict, expected: dict) -> list[tuple[tuple[int, int], int, int]]:
    """[((p, q), expected, found)] wherever the two tables disagree."""
    keys = sorted(set(found) | set(expected), key=lambda k: (k[1], k[0]))
    return [(k, expected.get(k, 0), found.get(k, 0)) for k in keys if expected.get(k, 0) != found.get(k, 0)]
