"""The cubic Veronese surface, from multigraded strands to its Betti table.

P^2 embedded by cubics sits in P^9.  This walks through the pieces of the
computation on the smallest interesting case:

1. the Hilbert-series numerator, which decides most of the table for free;
2. one strand of the Koszul complex at a fixed multidegree, and its ranks;
3. the full table and the multigraded structure of K_{1,1};
4. the Schur module that K_{1,1} turns out to be.

Run:  python demos/cubic_veronese.py
"""

from veronese_syzygies.betti import compute_betti, format_table
from veronese_syzygies.hilbert import numerator, relevant_range
from veronese_syzygies.koszul import StrandSpec, build_differential, strand_basis
from veronese_syzygies.rank import rank_prime_field
from veronese_syzygies.schur import decompose_position

B, D = 0, 3

print("== numerator of the Hilbert series, specialised to one variable")
A = numerator(B, D)
print("  ", A.standard_grading(B, D))
print("   positions the numerator cannot decide:", sorted(relevant_range(B, D)) or "none")

print("\n== one strand: p=2, q=2 at multidegree (7,3,2)")
spec = StrandSpec(2, D, B, 2, 2, (7, 3, 2))
m = build_differential(spec)
print(f"   basis of the middle term: {len(strand_basis(spec))} wedges")
print(f"   d_2 is {m.nrows}x{m.ncols} with {m.nnz} nonzeros, rank {rank_prime_field(m).rank}")

print("\n== the Betti table (rows q, columns p)")
db = compute_betti(B, D, shortcut=False)
print(format_table(db.total_table()))

hs = db.hilbert_series(1, 1).clean()
print(f"\n== K_11 has {hs.dimension()} dimensions spread over {len(hs)} multidegrees")
for a, mult in sorted(hs.items(), reverse=True):
    print(f"   t^{a}" + (f" x{mult}" if mult > 1 else ""))

dec = decompose_position(db, 1, 1)
print("\n== as a GL_3-representation K_11 is", " + ".join(f"S_{lam}" for lam in dec.modules))
