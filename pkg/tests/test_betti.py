from itertools import combinations

import flint
import numpy as np
import pytest

from veronese_syzygies.betti import (
    BettiDatabase,
    IncompleteDatabaseError,
    apply_duality,
    betti_csv,
    complex_dims,
    compute_betti,
    dual_rule,
    golden_table,
    hilbert_crosscheck,
    multigraded_lines,
    read_table_file,
    solve_job,
    strand_betti,
    strand_jobs,
    strand_spec,
    table_diff,
    unique_tasks,
)
from veronese_syzygies.core import monomial_basis, orbit
from veronese_syzygies.hilbert import IntegrityError
from veronese_syzygies.koszul import SparseSignMatrix, StrandSpec, build_differential
from veronese_syzygies.rank import RankResult, rank_prime_field

EX15 = {(0, 0): 1, (1, 1): 27, (2, 1): 105, (3, 1): 189, (4, 1): 189, (5, 1): 105, (6, 1): 27, (7, 2): 1}


def nz(table):
    return {k: v for k, v in table.items() if v}


def whole_degree_betti(b, d, pmax):
    """Koszul homology of S(b;d) one total degree at a time, no multigrading.

    C_p in degree k is Lambda^p V (x) S_{d(k-p)+b}; ranks are exact over Z.
    """
    V = monomial_basis(2, d)
    out = {}
    for k in range(pmax + 3):
        def space(p):
            e = d * (k - p) + b
            if p < 0 or e < 0 or p > len(V):
                return []
            return [(w, f) for w in combinations(range(len(V)), p) for f in monomial_basis(2, e)]

        def rank(p):  # d_p: C_p -> C_{p-1}
            src, dst = space(p), space(p - 1)
            if not src or not dst:
                return 0
            index = {x: i for i, x in enumerate(dst)}
            mat = np.zeros((len(dst), len(src)), dtype=np.int64)
            for j, (w, f) in enumerate(src):
                for i, pos in enumerate(w):
                    g = tuple(x + y for x, y in zip(f, V[pos]))
                    mat[index[(w[:i] + w[i + 1:], g)], j] += (-1) ** (i + 1)
            return flint.fmpz_mat(mat.tolist()).rank()

        for p in range(0, min(k, pmax) + 1):
            dim = len(space(p))
            beta = dim - rank(p) - rank(p + 1)
            if beta:
                out[(p, k - p)] = beta
    return out


def test_strand_betti_examples():
    spec = StrandSpec(2, 3, 0, 2, 2, (7, 3, 2))
    assert strand_betti(spec, RankResult(8, "x"), RankResult(15, "x")) == 0
    with pytest.raises(IntegrityError):
        strand_betti(spec, RankResult(9, "x"), RankResult(15, "x"))


def test_k11_of_cubic_veronese_multidegrees():
    db = compute_betti(0, 3, shortcut=False)
    assert db.get(1, (2, 2, 2)) == 3
    assert db.get(1, (4, 2, 0)) == 1
    assert db.get(1, (0, 2, 4)) == 1
    assert db.get(2, (7, 3, 2)) == 0


@pytest.mark.parametrize("artinian", [False, True])
@pytest.mark.parametrize("shortcut", [False, True])
def test_cubic_table(artinian, shortcut):
    db = compute_betti(0, 3, shortcut=shortcut, artinian=artinian)
    assert nz(db.total_table()) == EX15
    assert hilbert_crosscheck(db) == []


def test_k11_hilbert_series_has_19_terms():
    db = compute_betti(0, 3)
    hs = db.hilbert_series(1, 1)
    assert len(hs) == 19 and sum(hs.values()) == 27
    assert hs[(2, 2, 2)] == 3


def test_veronese_surface_against_whole_degree_oracle():
    for b in (0, 1):
        db = compute_betti(b, 2, shortcut=False)
        assert nz(db.total_table()) == whole_degree_betti(b, 2, 3)
    assert nz(compute_betti(0, 2, shortcut=False).total_table()) == {(0, 0): 1, (1, 1): 6, (2, 1): 8, (3, 1): 3}


def test_cubic_against_whole_degree_oracle_low_p():
    oracle = whole_degree_betti(1, 3, 2)
    table = compute_betti(1, 3).total_table()
    assert {k: v for k, v in table.items() if k[0] <= 2 and v} == {k: v for k, v in oracle.items() if k[0] <= 2}


def test_quartic_row_one():
    table = compute_betti(0, 4, artinian=True).total_table()
    assert [table.get((p, 1), 0) for p in range(1, 11)] == [75, 536, 1947, 4488, 7095, 7920, 6237, 3344, 1089, 120]


def test_dual_rule_examples():
    r = dual_rule(0, 4)
    assert (r.b_dual, r.s) == (1, 1) and r(1, 1) == (11, 1)
    r = dual_rule(2, 4)
    assert (r.b_dual, r.s) == (3, 2) and r(0, 0) == (12, 1)
    r = dual_rule(1, 5)
    assert r.b_dual == 1 and r(0, 0) == (18, 2)
    assert golden_table(0, 4)[(1, 1)] == golden_table(1, 4)[(11, 1)] == 75
    assert golden_table(2, 4)[(0, 0)] == golden_table(3, 4)[(12, 1)] == 6


@pytest.mark.parametrize("d", [2, 3, 4])
def test_duality_round_trip(d):
    tables = {b: compute_betti(b, d, artinian=True) for b in range(d)}
    for b, db in tables.items():
        rule = dual_rule(b, d)
        assert nz(rule.map_table(db.total_table())) == nz(tables[rule.b_dual].total_table())
        assert nz(apply_duality(db).total_table()) == nz(tables[rule.b_dual].total_table())
        back = dual_rule(rule.b_dual, d)
        assert back.b_dual == b


@pytest.mark.parametrize("b", [0, 1, 2, 3])
def test_quartic_crosscheck_and_golden(b):
    db = compute_betti(b, 4, artinian=True)
    assert hilbert_crosscheck(db) == []
    assert table_diff(db.total_table(), golden_table(b, 4)) == []


def test_hilbert_numerator_agrees_with_ranks_outside_range():
    for b in range(4):
        full = compute_betti(b, 4, shortcut=False, artinian=True)
        short = compute_betti(b, 4, shortcut=True, artinian=True)
        assert full.multigraded == short.multigraded


def test_crosscheck_flags_perturbation():
    db = compute_betti(0, 3)
    key = (1, (4, 2, 0))
    db.multigraded[key] += 1
    bad = hilbert_crosscheck(db)
    assert [a for a, _, _ in bad] == [(4, 2, 0)]


def test_symmetric_strands_agree():
    for a in [(7, 3, 2), (5, 4, 3), (6, 6, 0)]:
        dims = {perm: complex_dims(0, 3, perm) for perm in orbit(a)}
        assert len({tuple(sorted(v.items())) for v in dims.values()}) == 1
        ranks = {perm: rank_prime_field(build_differential(strand_spec(0, 3, 2, perm))).rank for perm in orbit(a)}
        assert len(set(ranks.values())) == 1


def test_sign_convention_does_not_change_ranks():
    for a in [(7, 3, 2), (4, 4, 4), (6, 3, 3)]:
        for k in (1, 2, 3):
            m = build_differential(strand_spec(0, 3, k, a))
            # (-1)^(k-1) instead of (-1)^k: every entry changes sign
            alt = SparseSignMatrix.from_dense(-m.to_dense())
            assert rank_prime_field(alt).rank == rank_prime_field(m).rank == \
                flint.fmpz_mat(m.to_dense().tolist()).rank()


def test_database_round_trip(tmp_path):
    db = compute_betti(2, 4, artinian=True)
    path = db.save(tmp_path)
    assert path == tmp_path / "data" / "n2" / "d4" / "b2"
    back = BettiDatabase.load(tmp_path, 2, 4)
    assert back.multigraded == db.multigraded and back.complete == db.complete
    assert back.total_table() == db.total_table()
    before = {f.name: f.read_bytes() for f in path.iterdir()}
    back.save(tmp_path)
    assert {f.name: f.read_bytes() for f in path.iterdir()} == before
    assert set(db.provenance.values()) <= {"rank_computed", "hilbert_derived"}
    assert (path / "betti.csv").read_text().splitlines()[0].startswith("q,0,1,2")


def test_incomplete_database():
    with pytest.raises(IncompleteDatabaseError):
        BettiDatabase(0, 3).total_table()


def test_exports():
    db = compute_betti(0, 3)
    csv = betti_csv(db.total_table()).splitlines()
    assert csv[2] == "1,0,27,105,189,189,105,27,0"
    lines = multigraded_lines(db)
    assert "1 4 2 0 1" in lines and "1 2 2 2 3" in lines
    assert sum(int(ln.split()[-1]) for ln in lines if ln.startswith("1 ")) == 27


def test_jobs_share_tasks():
    jobs = strand_jobs(2, 4)
    tasks = unique_tasks(jobs)
    assert len(tasks) <= sum(len(j.tasks) for j in jobs)
    assert len({t.id for t in tasks}) == len(tasks)
    ranks = {t.id: rank_prime_field(build_differential(t.spec)).rank for t in tasks}
    assert all(v >= 0 for job in jobs for v in solve_job(job, ranks).values())


def test_read_table_file(tmp_path):
    f = tmp_path / "t.txt"
    f.write_text("# header\n1 0 0\n0 3 2\n")
    assert read_table_file(f) == {(0, 0): 1, (1, 1): 3, (2, 1): 2}
