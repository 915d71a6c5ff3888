import math
from fractions import Fraction
from statistics import NormalDist

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veronese_syzygies.analysis import (
    betti_distribution,
    bs_decompose,
    is_unimodal,
    moments_direct,
    moments_streaming,
    most_redundant,
    pure_diagram,
    qq_data,
    redundancy_ratio,
    redundant_schur,
    table_row,
    to_graded,
    write_tsv,
)
from veronese_syzygies.betti import compute_betti, golden_table
from veronese_syzygies.schur import decompose_position

# S/I for I = (x^2, xy, y^4) in k[x, y], as {(p, q): beta}
MONOMIAL_IDEAL = {(0, 0): 1, (1, 1): 2, (1, 3): 1, (2, 1): 1, (2, 3): 1}


def test_pure_diagrams():
    pd = pure_diagram((0, 2, 3))
    assert [pd[(0, 0)], pd[(1, 2)], pd[(2, 3)]] == [Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)]
    pd = pure_diagram((0, 1))
    assert pd.entries == {(0, 0): 1, (1, 1): 1}
    pd = pure_diagram((0, 1, 2, 3))
    for i, di in enumerate((0, 1, 2, 3)):
        expect = Fraction(1, math.prod(abs(di - dj) for dj in (0, 1, 2, 3) if dj != di))
        assert pd[(i, di)] == expect
    with pytest.raises(ValueError):
        pure_diagram((0, 2, 2))


def test_monomial_ideal_coefficients():
    dec = bs_decompose(MONOMIAL_IDEAL)
    assert dec.coefficients == [3, 3, 4]
    assert dec.reconstruct() == to_graded(MONOMIAL_IDEAL)
    assert dec.is_chain()
    assert dec.lines()[0] == "0 2 3 3/1"


def test_quintic_b3_first_coefficient():
    dec = bs_decompose(golden_table(3, 5))
    assert dec.coefficients[0] == 2636271525888000
    scaled = [float(c) * 1e-16 for c in dec.coefficients]
    expected = [.263627, 1.5441, 8.05149, 4.52584, 1.04027, .455071, .125537]
    assert len(scaled) == len(expected)
    assert all(abs(x - y) < 5e-6 for x, y in zip(scaled, expected))


def test_negative_table_rejected():
    with pytest.raises(ValueError):
        bs_decompose({(0, 0): 1, (1, 1): -1})
    with pytest.raises(ValueError):
        bs_decompose({(0, 0): 1, (2, 0): 1})  # position 1 empty


@pytest.mark.parametrize("b", [0, 1, 2, 3])
def test_quartic_tables_decompose_exactly(b):
    table = golden_table(b, 4)
    dec = bs_decompose(table)
    assert dec.reconstruct() == {k: Fraction(v) for k, v in to_graded(table).items()}
    assert dec.is_chain() and all(c > 0 for c in dec.coefficients)


def test_betti_distribution_of_quartic_row():
    row = table_row(golden_table(0, 4), 1)
    dist = betti_distribution(row)
    assert dist.offset == 1
    assert dist.raw == [75, 536, 1947, 4488, 7095, 7920, 6237, 3344, 1089, 120]
    assert [v / 1e4 for v in dist.raw[:2]] == [.0075, .0536]
    assert math.isclose(sum(dist.probs), 1.0)


def test_zero_row():
    with pytest.raises(ValueError):
        betti_distribution([0, 0])


@settings(max_examples=100)
@given(st.lists(st.integers(0, 10**7), min_size=2, max_size=30).filter(lambda xs: sum(1 for x in xs if x) >= 2))
def test_streaming_and_direct_moments_agree(ws):
    total = sum(ws)
    probs = [w / total for w in ws]
    a, b = moments_direct(probs), moments_streaming(probs)
    for x, y in zip(a, b):
        assert abs(x - y) <= 1e-9 * max(1.0, abs(x))


def test_degenerate_moments():
    assert math.isnan(moments_direct([1.0, 0.0])[2])
    assert math.isnan(moments_streaming([1.0, 2.5e-225])[2])


def test_streaming_moments_on_quintic_row():
    dist = betti_distribution(table_row(golden_table(0, 5), 1))
    a = moments_direct(dist.probs)
    b = moments_streaming(dist.probs)
    assert all(abs(x - y) < 1e-12 for x, y in zip(a, b))
    assert (dist.mean, dist.variance) == pytest.approx(a[:2])


def test_qq_uses_midpoint_quantiles():
    pairs = qq_data(([0, 1, 2, 3], [1, 1, 1, 1]), fit=(0, 1))
    normal = NormalDist()
    assert [x for x, _ in pairs] == pytest.approx([normal.inv_cdf(k / 8) for k in (1, 3, 5, 7)])
    assert [y for _, y in pairs] == [0, 1, 2, 3]


def test_qq_self_consistency():
    normal = NormalDist(0, 1)
    qs = [normal.inv_cdf((k + 0.5) / 50) for k in range(50)]
    pairs = qq_data((qs, [1] * 50), fit=(0, 1))
    assert max(abs(x - y) for x, y in pairs) < 1e-9


def test_qq_trimming_and_errors(tmp_path):
    dist = betti_distribution(table_row(golden_table(0, 5), 1))
    pairs = qq_data(dist, trim_head=1, trim_tail=1)
    assert len(pairs) == len(dist.probs) - 2
    assert all(x1 < x2 and y1 < y2 for (x1, y1), (x2, y2) in zip(pairs, pairs[1:]))
    with pytest.raises(ValueError):
        qq_data([0.5, 0.5], 0, 0)
    with pytest.raises(ValueError):
        qq_data(([1, 1, 1], [1, 1, 1]))
    with pytest.raises(ValueError):
        qq_data(dist, trim_head=len(dist.probs))
    write_tsv(pairs, tmp_path / "qq.tsv")
    assert len((tmp_path / "qq.tsv").read_text().splitlines()) == len(pairs)


def test_unimodality():
    assert is_unimodal((6, 62, 276, 660, 825, 252))
    assert not is_unimodal((1, 2, 1, 1, 2, 1))
    assert is_unimodal(()) and is_unimodal((5,))


@given(st.lists(st.integers(0, 100), max_size=20))
def test_unimodal_matches_definition(seq):
    peak_ok = any(all(seq[i] <= seq[i + 1] for i in range(k)) and
                  all(seq[i] >= seq[i + 1] for i in range(k, len(seq) - 1)) for k in range(max(len(seq), 1)))
    assert is_unimodal(seq) == peak_ok


def test_redundancy_ratios():
    assert redundancy_ratio(golden_table(2, 4), 5, 0) == Fraction(11, 25)
    assert float(redundancy_ratio(golden_table(2, 5), 5, 0)) == pytest.approx(0.59, abs=0.005)
    assert redundancy_ratio({(1, 0): 7, (0, 1): 7}, 1, 0) == 0
    with pytest.raises(ZeroDivisionError):
        redundancy_ratio({(1, 0): 7}, 1, 0)
    assert most_redundant(golden_table(2, 4)) == ((5, 0), Fraction(11, 25))


def test_redundant_schur_quintic(quintic_b0):
    decs = {(p, q): decompose_position(quintic_b0, p, q) for p, q in [(14, 1), (13, 2), (15, 1), (14, 2)]}
    found = dict(redundant_schur(decs))
    assert found[(30, 25, 20)] == [(14, 1), (13, 2)]
    assert found[(30, 24, 21)] == [(14, 1), (13, 2)]


def test_redundant_schur_cubic_empty():
    db = compute_betti(0, 3)
    decs = {pq: decompose_position(db, *pq) for pq, v in db.total_table().items() if v}
    assert redundant_schur(decs) == []
