import flint
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veronese_syzygies.koszul import SparseSignMatrix, StrandSpec, build_differential
from veronese_syzygies.rank import (
    DEFAULT_TOLERANCES,
    MemoryCeilingExceeded,
    RankError,
    _dense_rank_mod,
    kernel_dim,
    lu_pivots,
    matrix_rank,
    random_primes,
    rank_float_lu,
    rank_prime_field,
)


def exact_rank(arr) -> int:
    arr = np.asarray(arr, dtype=np.int64)
    if arr.size == 0:
        return 0
    return flint.fmpz_mat(arr.tolist()).rank()


def random_sign_matrix(rng, nrows, ncols, density):
    mask = rng.random((nrows, ncols)) < density
    signs = rng.choice([-1, 1], size=(nrows, ncols))
    return SparseSignMatrix.from_dense(mask * signs)


def test_identity():
    m = SparseSignMatrix.from_dense(np.diag([1, -1, 1, 1, -1]))
    assert rank_prime_field(m).rank == 5
    assert rank_float_lu(m).rank == 5


def test_example_strand_ranks():
    d2 = build_differential(StrandSpec(2, 3, 0, 2, 2, (7, 3, 2)))
    d3 = build_differential(StrandSpec(2, 3, 0, 3, 1, (7, 3, 2)))
    assert rank_prime_field(d2).rank == 8
    assert rank_prime_field(d3).rank == 15
    assert rank_float_lu(d2).rank == 8
    assert rank_float_lu(d3).rank == 15
    assert kernel_dim(d2, rank_prime_field(d2)) == 15
    # 23 - 8 - 15 = 0: no homology in this strand
    assert d2.ncols - 8 - 15 == 0


def test_random_matrix_against_exact_oracle():
    rng = np.random.default_rng(1)
    m = random_sign_matrix(rng, 40, 60, 0.1)
    assert rank_prime_field(m).rank == exact_rank(m.to_dense())


def test_zero_matrix_kernel():
    m = SparseSignMatrix.empty(4, 7)
    r = rank_prime_field(m)
    assert r.rank == 0 and kernel_dim(m, r) == 7


def test_float_below_tolerance():
    m = SparseSignMatrix(2, 2, np.array([0, 1]), np.array([0, 1]), np.array([1, 1]))
    arr = np.diag([1.0, 1e-14])
    assert int(np.count_nonzero(lu_pivots(arr) > 1e-8)) == 1
    assert rank_float_lu(m, [1e-8]).rank == 2  # the stored entries are +-1


def test_plateau_reporting():
    m = build_differential(StrandSpec(2, 3, 0, 2, 2, (7, 3, 2)))
    r = rank_float_lu(m, DEFAULT_TOLERANCES)
    assert r.per_trial == [8] * len(DEFAULT_TOLERANCES) and r.agreement


def test_tolerances_validated():
    m = SparseSignMatrix.from_dense(np.eye(2, dtype=int))
    with pytest.raises(ValueError):
        rank_float_lu(m, [])
    with pytest.raises(ValueError):
        rank_float_lu(m, [1e-6, 1e-8])
    with pytest.raises(ValueError):
        matrix_rank(m, "quantum")


def test_prime_validation():
    m = SparseSignMatrix.from_dense(np.eye(2, dtype=int))
    with pytest.raises(ValueError):
        rank_prime_field(m, [15])
    with pytest.raises(ValueError):
        rank_prime_field(m, [1_000_003, 1_000_003])


def test_random_primes_deterministic():
    ps = random_primes(5, seed=3)
    assert ps == random_primes(5, seed=3)
    assert all(2**29 <= p < 2**30 for p in ps) and len(set(ps)) == 5


def test_small_prime_detects_rank_drop():
    # [[2, 0], [0, 1]] style drop: rank over F_p can only be lower than over Q
    arr = np.array([[1, 1], [1, -1]])  # determinant -2
    m = SparseSignMatrix.from_dense(arr)
    assert rank_prime_field(m).rank == 2


def test_memory_ceiling():
    rng = np.random.default_rng(2)
    m = random_sign_matrix(rng, 60, 60, 0.5)
    with pytest.raises(MemoryCeilingExceeded):
        rank_prime_field(m, mem_ceiling=1)


def test_disagreement_raises(monkeypatch):
    import veronese_syzygies.rank as rank_mod

    calls = iter([3, 2, 1, 0, 5])
    monkeypatch.setattr(rank_mod, "_rank_mod_p", lambda m, q, mem_ceiling=None: (next(calls), 0))
    m = SparseSignMatrix.from_dense(np.eye(3, dtype=int))
    with pytest.raises(RankError):
        rank_prime_field(m)


@settings(max_examples=40)
@given(st.integers(1, 30), st.integers(1, 30), st.floats(0.05, 0.6), st.integers(0, 2**31))
def test_prime_rank_matches_exact(nrows, ncols, density, seed):
    rng = np.random.default_rng(seed)
    m = random_sign_matrix(rng, nrows, ncols, density)
    r = rank_prime_field(m)
    assert r.rank == exact_rank(m.to_dense())
    assert r.rank == rank_prime_field(m.transpose()).rank
    perm_r, perm_c = rng.permutation(nrows), rng.permutation(ncols)
    permuted = SparseSignMatrix.from_dense(m.to_dense()[perm_r][:, perm_c])
    assert rank_prime_field(permuted).rank == r.rank


@settings(max_examples=25)
@given(st.integers(1, 120), st.integers(1, 120), st.integers(0, 2**31))
def test_dense_block_elimination(nrows, ncols, seed):
    rng = np.random.default_rng(seed)
    p = random_primes(1, seed)[0]
    k = int(rng.integers(0, min(nrows, ncols) + 1))
    a = rng.integers(0, p, size=(nrows, k)) @ rng.integers(0, 5, size=(k, ncols))
    a %= p
    oracle = flint.nmod_mat(a.tolist(), p).rank()
    assert _dense_rank_mod(a.astype(np.int64), p, panel=16) == oracle


def test_float_matches_prime_on_random():
    rng = np.random.default_rng(5)
    for _ in range(10):
        m = random_sign_matrix(rng, 50, 70, 0.08)
        assert rank_float_lu(m).rank == rank_prime_field(m).rank
        assert rank_float_lu(m, sparse=False).rank == rank_prime_field(m).rank
