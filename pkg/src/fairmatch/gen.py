"""Synthetic instance generators."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional, Sequence

from .model import (
    DiscreteMixture,
    IndependentParametric,
    Instance,
    Normal,
    Scenario,
)

TIE_RETRIES = 20


def _ids(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _preferences(rng: random.Random, n: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for _ in range(n):
        pref = list(range(n))
        rng.shuffle(pref)
        out.append(tuple(pref))
    return tuple(out)


def _tie_free_column(rng: random.Random, n: int) -> list[Fraction]:
    hi = 10 * n
    for _ in range(TIE_RETRIES):
        col = [rng.randrange(hi) for _ in range(n)]
        if len(set(col)) == n:
            return [Fraction(v) for v in col]
    # give up resampling: break ties by a sub-unit index offset
    return [Fraction(v) + Fraction(i, n + 1) for i, v in enumerate(col)]


def _utility(rng: random.Random, n: int) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(rng.randrange(41), 4) for _ in range(n)) for _ in range(n))


def gen_mixture(n: int, scenarios: int, seed: int) -> Instance:
    """Random preferences, ``scenarios`` tie-free merit matrices, random utilities."""
    if n < 1 or scenarios < 1:
        raise ValueError("need n >= 1 and at least one scenario")
    rng = random.Random(seed)
    prefs = _preferences(rng, n)
    weights = [rng.randint(1, 9) for _ in range(scenarios)]
    total = sum(weights)
    mixture = []
    for w in weights:
        cols = [_tie_free_column(rng, n) for _ in range(n)]
        matrix = tuple(tuple(cols[y][x] for y in range(n)) for x in range(n))
        mixture.append(Scenario(Fraction(w, total), matrix))
    return Instance(
        individuals=_ids("x", n),
        resources=_ids("y", n),
        preferences=prefs,
        merits=DiscreteMixture(tuple(mixture)),
        utility=_utility(rng, n),
    )


def gen_normal(
    n: int,
    means: Optional[Sequence[Sequence[Fraction]]] = None,
    std: Fraction = Fraction(3),
    seed: int = 0,
) -> Instance:
    """Independent normal merits around ``means`` (random ratings in [1, 10] if omitted).

    The principal's utility is the mean merit matrix.
    """
    std = Fraction(std)
    if std <= 0:
        raise ValueError("std must be positive")
    rng = random.Random(seed)
    prefs = _preferences(rng, n)
    if means is None:
        means = [[Fraction(rng.randint(10, 100), 10) for _ in range(n)] for _ in range(n)]
    mu = tuple(tuple(Fraction(v) for v in row) for row in means)
    entries = tuple(tuple(Normal(v, std) for v in row) for row in mu)
    return Instance(
        individuals=_ids("x", n),
        resources=_ids("y", n),
        preferences=prefs,
        merits=IndependentParametric(entries),
        utility=mu,
    )
