"""Thompson-sampling matching and the phi-mix of it with the utility-max matching."""

from __future__ import annotations

from fractions import Fraction

from .estimate import FairnessCdf, cdf_to_pdf
from .flowlp import utility_max_matching
from .merit import sample_merits
from .model import Instance, Matching, Matrix, permutation_matrix, policy_utility
from .stable import fair_matching_for_sample


def thompson_matching(inst: Instance, seed: int, index: int) -> Matching:
    """Stable matching for one fresh merit draw: a 1-fair randomized policy."""
    return fair_matching_for_sample(inst, sample_merits(inst.merits, seed, index))


def mix_marginals(inst: Instance, l: FairnessCdf, phi: Fraction) -> tuple[Matrix, Fraction]:
    """Marginals of playing the fair baseline w.p. phi and the utility-max matching otherwise."""
    phi = Fraction(phi)
    if not 0 <= phi <= 1:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    best, _ = utility_max_matching(inst)
    star = permutation_matrix(best)
    thom = cdf_to_pdf(l, inst.preferences)
    P = tuple(
        tuple((1 - phi) * s + phi * t for s, t in zip(srow, trow))
        for srow, trow in zip(star, thom)
    )
    return P, policy_utility(P, inst.utility)
