"""Shape statistics of Betti tables.

Rows of a Betti table, normalised to probability distributions, look close to
normal.  We look at the first row of S(0;4) and of S(2;5): moments, a Q-Q
comparison against the moment-fitted normal, unimodality and redundancy
between neighbouring positions.  Then the Boij-Soderberg decomposition of
the cubic table, which writes it as a positive combination of pure diagrams.

Run:  python demos/betti_statistics.py
"""

from veronese_syzygies.analysis import (
    betti_distribution,
    bs_decompose,
    is_unimodal,
    most_redundant,
    qq_data,
    redundancy_ratio,
    table_row,
)
from veronese_syzygies.betti import compute_betti

for b, d in [(0, 4), (2, 5)]:
    table = compute_betti(b, d, artinian=True).total_table()
    row = table_row(table, 1)
    dist = betti_distribution(row)
    print(f"== row q=1 of S({b};{d}): {dist.raw}")
    print(f"   mean {dist.mean:.3f}  variance {dist.variance:.3f}  "
          f"skewness {dist.skewness:.4f}  excess kurtosis {dist.excess_kurtosis:.4f}")
    print(f"   unimodal: {is_unimodal(dist.raw)}")
    print("   Q-Q (normal quantile, observed):")
    for x, y in qq_data(dist, trim_head=1, trim_tail=1):
        print(f"     {x:8.3f} {y:8.3f}")
    found = most_redundant(table)
    if found is None:
        print("   no position shares a diagonal with a nonzero neighbour")
    else:
        pos, ratio = found
        print(f"   most redundant position {pos}: {ratio} = {float(ratio):.3f}")
    print()

table = compute_betti(2, 4, artinian=True).total_table()
print("== redundancy of (5,0) in S(2;4):", redundancy_ratio(table, 5, 0))

cubic = compute_betti(0, 3).total_table()
dec = bs_decompose(cubic)
print("\n== Boij-Soderberg decomposition of S(0;3)")
for line in dec.lines():
    print("  ", line)
