"""Fairness CDFs: exact enumeration, Monte-Carlo estimation and the robustness shift.

Row ``x`` of a CDF holds the probabilities that individual ``x`` receives one
of her top ``k`` resources, for ``k = 1..n`` (stored at column ``k - 1``).
"""

from __future__ import annotations

import json
import math
from itertools import accumulate
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Optional, Sequence

from .merit import enumerate_scenarios, sample_merits
from .model import Instance, InstanceError, Matrix, fraction_str, to_fraction
from .stable import fair_matching_for_sample

KINDS = ("exact", "estimated", "adjusted")


class CdfError(ValueError):
    pass


@dataclass(frozen=True)
class FairnessCdf:
    entries: Matrix
    kind: str = "exact"
    sample_count: Optional[int] = None
    epsilon: Optional[Fraction] = None
    kappa: Optional[Fraction] = None

    @property
    def n(self) -> int:
        return len(self.entries)

    def jump(self, x: int, k: int) -> Fraction:
        """ell[x, k] - ell[x, k-1] with 1-based ``k`` and ell[x, 0] = 0."""
        row = self.entries[x]
        return row[k - 1] - (row[k - 2] if k > 1 else 0)

    def max_abs_diff(self, other: "FairnessCdf") -> Fraction:
        return max(
            abs(a - b)
            for ra, rb in zip(self.entries, other.entries)
            for a, b in zip(ra, rb)
        )


def check_cdf(l: FairnessCdf, prefs: Sequence[Sequence[int]]) -> None:
    """Raise ``CdfError`` unless every row is a CDF and the implied PDF is doubly stochastic."""
    n = l.n
    if len(prefs) != n or any(len(row) != n for row in l.entries):
        raise CdfError(f"expected an {n}x{n} CDF matching the preferences")
    for x, row in enumerate(l.entries):
        prev = Fraction(0)
        for k, v in enumerate(row, start=1):
            if v < prev:
                raise CdfError(f"row {x} decreases at k={k}")
            prev = v
        if row[-1] != 1:
            raise CdfError(f"row {x} ends at {row[-1]}, not 1")
    for y in range(n):
        col = sum(l.jump(x, _rank(prefs[x], y)) for x in range(n))
        if col != 1:
            raise CdfError(f"resource {y}: allocation mass {col}, not 1")


def _rank(pref: Sequence[int], y: int) -> int:
    return pref.index(y) + 1


def exact_fairness_cdf(inst: Instance) -> FairnessCdf:
    """ell by enumerating the finite support of the merit distribution."""
    n = inst.n
    ranks = inst.ranks
    pdf = [[Fraction(0)] * n for _ in range(n)]
    for prob, V in enumerate_scenarios(inst.merits):
        m = fair_matching_for_sample(inst, V)
        for x, y in enumerate(m):
            pdf[x][ranks[x][y] - 1] += prob
    return FairnessCdf(tuple(tuple(accumulate(row)) for row in pdf), "exact")


def required_samples(epsilon: Fraction | float, kappa: Fraction | float, n: int) -> int:
    """ceil((kappa + 1) ln(2n) / (2 epsilon^2)), the DKW sample size."""
    if epsilon <= 0 or kappa <= 0:
        raise ValueError("epsilon and kappa must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    return math.ceil((float(kappa) + 1) * math.log(2 * n) / (2 * float(epsilon) ** 2))


def rank_counts(inst: Instance, seed: int, start: int, stop: int) -> list[list[int]]:
    """Histogram of achieved ranks over samples ``start..stop-1``."""
    n = inst.n
    ranks = inst.ranks
    counts = [[0] * n for _ in range(n)]
    for i in range(start, stop):
        m = fair_matching_for_sample(inst, sample_merits(inst.merits, seed, i))
        for x, y in enumerate(m):
            counts[x][ranks[x][y] - 1] += 1
    return counts


def _rank_counts_job(args: tuple[Instance, int, int, int]) -> list[list[int]]:
    return rank_counts(*args)


def estimate_fairness_cdf(
    inst: Instance, m: int, seed: int = 0, *, workers: int = 1
) -> FairnessCdf:
    """ell-hat from ``m`` independent merit draws.

    Samples are split across ``workers`` processes by index range; the merged
    histogram is identical for every worker count.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    n = inst.n
    if workers <= 1 or m < 2 * workers:
        counts = rank_counts(inst, seed, 0, m)
    else:
        bounds = [m * i // workers for i in range(workers + 1)]
        jobs = [(inst, seed, bounds[i], bounds[i + 1]) for i in range(workers)]
        counts = [[0] * n for _ in range(n)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_rank_counts_job, jobs):
                for x in range(n):
                    for k in range(n):
                        counts[x][k] += part[x][k]
    entries = tuple(tuple(Fraction(c, m) for c in accumulate(row)) for row in counts)
    return FairnessCdf(entries, "estimated", sample_count=m)


def adjust_cdf(lhat: FairnessCdf, epsilon: Fraction) -> FairnessCdf:
    """ell-tilde[x, k] = (ell-hat[x, k] + k*eps) / (n*eps + 1)."""
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = lhat.n
    scale = n * epsilon + 1
    entries = tuple(
        tuple((v + k * epsilon) / scale for k, v in enumerate(row, start=1))
        for row in lhat.entries
    )
    return FairnessCdf(entries, "adjusted", lhat.sample_count, epsilon, lhat.kappa)


def cdf_to_pdf(l: FairnessCdf, prefs: Sequence[Sequence[int]]) -> Matrix:
    """Allocation matrix t[x][y] = ell[x, r_x(y)] - ell[x, r_x(y) - 1]."""
    check_cdf(l, prefs)
    n = l.n
    out = []
    for x in range(n):
        row = [Fraction(0)] * n
        for k, y in enumerate(prefs[x], start=1):
            row[y] = l.jump(x, k)
        out.append(tuple(row))
    return tuple(out)


def cdf_to_dict(l: FairnessCdf) -> dict:
    doc: dict = {"kind": l.kind, "entries": [[fraction_str(v) for v in row] for row in l.entries]}
    if l.sample_count is not None:
        doc["sample_count"] = l.sample_count
    if l.epsilon is not None:
        doc["epsilon"] = fraction_str(l.epsilon)
    if l.kappa is not None:
        doc["kappa"] = fraction_str(l.kappa)
    return doc


def cdf_from_dict(doc: dict) -> FairnessCdf:
    if not isinstance(doc, dict) or "entries" not in doc:
        raise InstanceError("$", "fairness CDF needs 'entries'")
    kind = doc.get("kind", "exact")
    if kind not in KINDS:
        raise InstanceError("$.kind", f"unknown kind {kind!r}")
    entries = tuple(
        tuple(to_fraction(v, f"$.entries[{i}][{j}]") for j, v in enumerate(row))
        for i, row in enumerate(doc["entries"])
    )
    eps = doc.get("epsilon")
    kappa = doc.get("kappa")
    return FairnessCdf(
        entries,
        kind,
        doc.get("sample_count"),
        None if eps is None else to_fraction(eps, "$.epsilon"),
        None if kappa is None else to_fraction(kappa, "$.kappa"),
    )


def write_cdf(l: FairnessCdf, sink: IO[str]) -> None:
    json.dump(cdf_to_dict(l), sink)
    sink.write("\n")


def read_cdf(source: IO[str] | str) -> FairnessCdf:
    text = source if isinstance(source, str) else source.read()
    try:
        return cdf_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InstanceError("$", f"malformed JSON: {exc}") from None
