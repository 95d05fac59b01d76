"""Fairness and utility audits of marginal allocation matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .estimate import FairnessCdf, adjust_cdf
from .flowlp import InfeasibleNetwork, solve_fair_lp
from .model import Instance, Matrix, fraction_str, policy_utility

Ratio = Union[Fraction, float]  # float only for +inf


def _ratio_str(r: Ratio) -> str:
    return "inf" if r == math.inf else fraction_str(r)  # type: ignore[arg-type]


def _opt_str(q: Optional[Fraction]) -> Optional[str]:
    return None if q is None else fraction_str(q)


@dataclass(frozen=True)
class AuditReport:
    """Per-(x, k) top-k mass and its ratio to the entitlement ell[x, k].

    A zero entitlement gives ratio ``math.inf``: the constraint is vacuous.
    """

    cumulative: Matrix
    ratios: tuple[tuple[Ratio, ...], ...]
    min_ratio: Ratio
    utility: Optional[Fraction] = None
    reference_utility: Optional[Fraction] = None
    utility_ratio: Optional[Fraction] = None
    fairness_bound: Optional[Fraction] = None
    utility_bound: Optional[Fraction] = None

    @property
    def fairness_ok(self) -> Optional[bool]:
        if self.fairness_bound is None:
            return None
        return self.min_ratio >= self.fairness_bound

    @property
    def utility_ok(self) -> Optional[bool]:
        if self.utility_bound is None or self.utility_ratio is None:
            return None
        return self.utility_ratio >= self.utility_bound

    def to_dict(self) -> dict:
        return {
            "cumulative": [[fraction_str(v) for v in row] for row in self.cumulative],
            "ratios": [[_ratio_str(r) for r in row] for row in self.ratios],
            "min_ratio": _ratio_str(self.min_ratio),
            "utility": _opt_str(self.utility),
            "reference_utility": _opt_str(self.reference_utility),
            "utility_ratio": _opt_str(self.utility_ratio),
            "fairness_bound": _opt_str(self.fairness_bound),
            "fairness_ok": self.fairness_ok,
            "utility_bound": _opt_str(self.utility_bound),
            "utility_ok": self.utility_ok,
        }


def top_k_mass(P: Matrix, prefs: Sequence[Sequence[int]]) -> Matrix:
    out = []
    for x, pref in enumerate(prefs):
        acc, row = Fraction(0), []
        for y in pref:
            acc += P[x][y]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def fairness_report(
    P: Matrix,
    l_truth: FairnessCdf,
    prefs: Sequence[Sequence[int]],
    *,
    mu: Optional[Matrix] = None,
    reference_utility: Optional[Fraction] = None,
    fairness_bound: Optional[Fraction] = None,
    utility_bound: Optional[Fraction] = None,
) -> AuditReport:
    cum = top_k_mass(P, prefs)
    ratios = tuple(
        tuple(c / l if l > 0 else math.inf for c, l in zip(crow, lrow))
        for crow, lrow in zip(cum, l_truth.entries)
    )
    min_ratio = min(r for row in ratios for r in row)
    utility = policy_utility(P, mu) if mu is not None else None
    utility_ratio = None
    if utility is not None and reference_utility is not None:
        utility_ratio = utility / reference_utility if reference_utility > 0 else Fraction(1)
    return AuditReport(
        cumulative=cum,
        ratios=ratios,
        min_ratio=min_ratio,
        utility=utility,
        reference_utility=reference_utility,
        utility_ratio=utility_ratio,
        fairness_bound=fairness_bound,
        utility_bound=utility_bound,
    )


@dataclass(frozen=True)
class EstimationBoundsReport:
    """Outcome of checking the guarantees of the adjusted LP against the truth."""

    max_error: Fraction
    vacuous: bool
    partial: bool
    feasible: bool
    min_fairness_ratio: Optional[Ratio] = None
    fairness_bound: Optional[Fraction] = None
    utility: Optional[Fraction] = None
    optimal_utility: Optional[Fraction] = None
    utility_bound: Optional[Fraction] = None

    @property
    def fairness_ok(self) -> Optional[bool]:
        if self.min_fairness_ratio is None or self.fairness_bound is None:
            return None
        return self.min_fairness_ratio >= self.fairness_bound

    @property
    def utility_ok(self) -> Optional[bool]:
        if self.utility is None or self.utility_bound is None:
            return None
        return self.utility >= self.utility_bound

    @property
    def passed(self) -> bool:
        if self.vacuous:
            return True
        return self.feasible and bool(self.fairness_ok) and (self.partial or bool(self.utility_ok))


def check_estimation_bounds(
    inst: Instance,
    l_truth: FairnessCdf,
    l_hat: FairnessCdf,
    epsilon: Fraction,
    phi: Fraction,
    *,
    compact: bool = False,
) -> EstimationBoundsReport:
    """Solve the LP on the adjusted estimate and check its guarantees.

    Given ``max |l_hat - l_truth| <= epsilon/2``: the adjusted LP must be
    feasible, its solution at least ``phi (1 + eps/2) / (n eps + 1)``-fair
    with respect to ``l_truth``, and its utility at least ``U(P*) /
    (phi n eps + 1)`` where ``P*`` solves the LP on ``l_truth``. The utility
    part needs an exact ``l_truth`` and is skipped (``partial``) otherwise.
    """
    epsilon, phi = Fraction(epsilon), Fraction(phi)
    n = inst.n
    err = l_hat.max_abs_diff(l_truth)
    if err > epsilon / 2:
        return EstimationBoundsReport(err, vacuous=True, partial=False, feasible=False)
    partial = l_truth.kind != "exact"
    fairness_bound = phi * (1 + epsilon / 2) / (n * epsilon + 1)
    try:
        P, utility = solve_fair_lp(inst, adjust_cdf(l_hat, epsilon), phi, compact=compact)
    except InfeasibleNetwork:
        return EstimationBoundsReport(
            err, vacuous=False, partial=partial, feasible=False, fairness_bound=fairness_bound
        )
    report = fairness_report(P, l_truth, inst.preferences)
    optimal = bound = None
    if not partial:
        _, optimal = solve_fair_lp(inst, l_truth, phi, compact=compact)
        bound = optimal / (phi * n * epsilon + 1)
    return EstimationBoundsReport(
        max_error=err,
        vacuous=False,
        partial=partial,
        feasible=True,
        min_fairness_ratio=report.min_ratio,
        fairness_bound=fairness_bound,
        utility=utility,
        optimal_utility=optimal,
        utility_bound=bound,
    )
