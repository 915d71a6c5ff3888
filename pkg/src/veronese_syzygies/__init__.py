"""Syzygies of Veronese embeddings of P^2.

Betti numbers of the modules S(b;d) = sum_i S_{di+b} over the polynomial ring
of P^{C(d+2,2)-1}, computed strand by strand from multigraded Koszul
complexes, together with their Schur module structure, monomial syzygies and
statistics of the resulting tables.

Modules: :mod:`core` (monomials, partitions, dominance), :mod:`koszul`
(strand bases and differentials), :mod:`rank` (exact and floating ranks),
:mod:`hilbert` (numerators and the relevant range), :mod:`betti` (assembly),
:mod:`schur`, :mod:`monomial_syzygies`, :mod:`analysis`, :mod:`jobs`
(file-based work queue) and :mod:`cli`.
"""
from .betti import BettiDatabase, compute_betti, format_table
from .core import dominant_weights, dominates, monomial_basis, sort_multidegree
from .koszul import StrandSpec, build_differential, strand_basis
from .rank import rank_float_lu, rank_prime_field

__all__ = [
    "BettiDatabase", "StrandSpec", "build_differential", "compute_betti", "dominant_weights", "dominates",
    "format_table", "monomial_basis", "rank_float_lu", "rank_prime_field", "sort_multidegree", "strand_basis",
]
__version__ = "0.1.0"
