"""Quartic Veronese syzygies as representations.

For d=4 every module S(b;4) has a full Betti table that can be computed in a
few seconds.  This script prints the four tables, decomposes each nonzero
K_{p,q} into Schur modules, and compares the dominant weights of K with those
of the explicit monomial syzygies E, position by position.

Run:  python demos/quartic_representations.py
"""

from veronese_syzygies.betti import compute_betti, format_table
from veronese_syzygies.monomial_syzygies import check_database
from veronese_syzygies.schur import count_stats, decompose_position

D = 4
for b in range(D):
    db = compute_betti(b, D, artinian=True)
    table = db.total_table()
    print(f"== S({b};{D})")
    print(format_table(table))

    print("   Schur modules per position (distinct / with multiplicity):")
    for q in (0, 1, 2):
        stats = count_stats(db, q)
        if any(stats["rank"]):
            pairs = " ".join(f"{u}/{w}" for u, w in zip(stats["distinct"], stats["with_multiplicity"]) if w)
            print(f"     q={q}: {pairs}")

    verdicts = check_database(db)
    bad = [v for v in verdicts if not v.match]
    print(f"   dominant weights of E and K agree at {len(verdicts) - len(bad)} of {len(verdicts)} positions")
    print()

db = compute_betti(0, D, artinian=True)
dec = decompose_position(db, 2, 1)
print("== K_{2,1}(0;4) in detail")
for lam, mult in sorted(dec.modules.items(), reverse=True):
    print(f"   S_{lam}" + (f" x{mult}" if mult > 1 else ""))
