"""Merit sampling, exact scenario enumeration and induced resource rankings."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import (
    DiscreteMixture,
    IndependentParametric,
    Matrix,
    MeritDistribution,
    Normal,
    Point,
    Uniform,
)

MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class UnsupportedDistribution(ValueError):
    pass


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x``, all arithmetic modulo 2**64::

        z = x + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)
    """
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    """64-bit generator state for sample ``index`` under ``seed``.

    ``splitmix64(splitmix64(seed) ^ index)``. The seed is avalanched before
    the XOR so that nearby seeds do not reuse each other's sample states.
    Sample ``i`` does not depend on which worker draws it or in what order.
    """
    return splitmix64(splitmix64(seed & MASK64) ^ (index & MASK64))


def sample_rng(seed: int, index: int) -> random.Random:
    return random.Random(mix_seed(seed, index))


def draw_weighted(rng: random.Random, weights: list[Fraction]) -> int:
    """Index drawn with probability exactly proportional to rational ``weights``."""
    denom = math.lcm(*(w.denominator for w in weights))
    u = rng.randrange(sum((w * denom).numerator for w in weights))
    acc = 0
    for i, w in enumerate(weights):
        acc += (w * denom).numerator
        if u < acc:
            return i
    raise AssertionError("weights exhausted")  # pragma: no cover


@dataclass(frozen=True)
class MeritSample:
    matrix: Matrix
    scenario_index: Optional[int] = None


def sample_merits(gamma: MeritDistribution, seed: int, index: int) -> MeritSample:
    rng = sample_rng(seed, index)
    if isinstance(gamma, DiscreteMixture):
        i = draw_weighted(rng, [sc.prob for sc in gamma.scenarios])
        return MeritSample(gamma.scenarios[i].matrix, i)

    rows: list[list[Fraction | None]] = []
    for row in gamma.entries:
        out: list[Fraction | None] = []
        for d in row:
            if isinstance(d, Normal):
                out.append(Fraction(rng.gauss(float(d.mean), float(d.std))))
            elif isinstance(d, Uniform):
                out.append(Fraction(rng.uniform(float(d.lo), float(d.hi))))
            elif isinstance(d, Point):
                out.append(d.value)
            else:
                out.append(None)
        rows.append(out)
    real = [v for row in rows for v in row if v is not None]
    floor = (min(real) if real else Fraction(0)) - 1
    return MeritSample(tuple(tuple(floor if v is None else v for v in row) for row in rows))


def enumerate_scenarios(gamma: MeritDistribution) -> list[tuple[Fraction, MeritSample]]:
    """Full finite support of ``gamma`` with exact probabilities."""
    if isinstance(gamma, DiscreteMixture):
        return [(sc.prob, MeritSample(sc.matrix, i)) for i, sc in enumerate(gamma.scenarios)]
    if not gamma.is_point_mass:
        raise UnsupportedDistribution("exact enumeration needs a finite-support merit distribution")
    # all-point tables are a single scenario; Floor entries resolve as when sampling
    return [(Fraction(1), sample_merits(gamma, 0, 0))]


def induced_resource_rankings(V: MeritSample | Matrix) -> tuple[tuple[int, ...], ...]:
    """Per resource, individuals from highest to lowest merit.

    ``result[y]`` lists individual indices best first. Equal merits are
    ordered by ascending individual index.
    """
    mat = V.matrix if isinstance(V, MeritSample) else V
    n_x = len(mat)
    n_y = len(mat[0]) if n_x else 0
    return tuple(
        tuple(sorted(range(n_x), key=lambda x: (-mat[x][y], x))) for y in range(n_y)
    )


def is_finite_support(gamma: MeritDistribution) -> bool:
    return isinstance(gamma, DiscreteMixture) or (
        isinstance(gamma, IndependentParametric) and gamma.is_point_mass
    )


__all__ = [
    "MeritSample",
    "UnsupportedDistribution",
    "draw_weighted",
    "enumerate_scenarios",
    "induced_resource_rankings",
    "is_finite_support",
    "mix_seed",
    "sample_merits",
    "sample_rng",
    "splitmix64",
]
