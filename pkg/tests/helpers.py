"""Independent oracles and random generators for the test-suite.

Nothing here calls the code paths it is used to check: stable matchings are
found by enumerating permutations, entitlements by enumerating scenarios and
picking the individual-optimal stable matching by brute force.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from pathlib import Path

from fairmatch.model import (
    DiscreteMixture,
    IndependentParametric,
    Instance,
    Point,
    Scenario,
    as_matrix,
    parse_instance,
)

FIXTURES = Path(__file__).parent / "fixtures"

TWO_SCENARIO_L = as_matrix([["1/10", "1/10", 1], [0, "9/10", 1], ["1/10", 1, 1]])
M1 = (1, 2, 0)  # i1->r2, i2->r3, i3->r1
M2 = (0, 1, 2)
M1_TILDE = (1, 0, 2)


def two_scenario() -> Instance:
    with open(FIXTURES / "two_scenario.json", encoding="utf-8") as fh:
        return parse_instance(fh)


# --- brute force -----------------------------------------------------------


def brute_stable_set(prefs, merit):
    """All matchings without a blocking pair, with resources ranking by merit (ties: lower index)."""
    n = len(prefs)
    out = set()
    for m in itertools.permutations(range(n)):
        owner = {y: x for x, y in enumerate(m)}
        ok = True
        for x in range(n):
            for y in prefs[x][: prefs[x].index(m[x])]:
                o = owner[y]
                better = merit[x][y] > merit[o][y] or (merit[x][y] == merit[o][y] and x < o)
                if better:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.add(m)
    return out


def brute_fair_set(prefs, merit):
    """All matchings that satisfy the merit-fairness axiom, checked literally."""
    n = len(prefs)
    out = set()
    for m in itertools.permutations(range(n)):
        owner = {y: x for x, y in enumerate(m)}
        if all(
            not (merit[owner[y]][y] < merit[x][y]) or prefs[x].index(y) > prefs[x].index(m[x])
            for x in range(n)
            for y in range(n)
        ):
            out.add(m)
    return out


def brute_individual_optimal(prefs, merit):
    stable = brute_stable_set(prefs, merit)
    n = len(prefs)
    for m in stable:
        if all(prefs[x].index(m[x]) <= prefs[x].index(s[x]) for s in stable for x in range(n)):
            return m
    raise AssertionError("no individual-optimal stable matching")


def brute_cdf(inst: Instance):
    """Entitlement matrix by scenario enumeration and brute-force stable matchings."""
    n = inst.n
    pdf = [[Fraction(0)] * n for _ in range(n)]
    for sc in inst.merits.scenarios:
        m = brute_individual_optimal(inst.preferences, sc.matrix)
        for x in range(n):
            pdf[x][inst.preferences[x].index(m[x])] += sc.prob
    out = []
    for row in pdf:
        acc, cum = Fraction(0), []
        for v in row:
            acc += v
            cum.append(acc)
        out.append(tuple(cum))
    return tuple(out)


def brute_max_utility(mu):
    n = len(mu)
    return max(sum(mu[x][m[x]] for x in range(n)) for m in itertools.permutations(range(n)))


def cdf_of_matching(prefs, m):
    """0/1 step CDF of a single matching."""
    n = len(m)
    return tuple(
        tuple(Fraction(1) if prefs[x].index(m[x]) < k else Fraction(0) for k in range(1, n + 1))
        for x in range(n)
    )


# --- random objects ----------------------------------------------------------


def random_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    p = list(range(n))
    rng.shuffle(p)
    return tuple(p)


def random_doubly_stochastic(rng: random.Random, n: int, terms: int | None = None):
    """Convex combination of random permutation matrices with rational weights."""
    terms = terms or rng.randint(1, n + 2)
    weights = [rng.randint(1, 12) for _ in range(terms)]
    total = sum(weights)
    P = [[Fraction(0)] * n for _ in range(n)]
    for w in weights:
        m = random_permutation(rng, n)
        for x in range(n):
            P[x][m[x]] += Fraction(w, total)
    return tuple(tuple(r) for r in P)


def random_valid_cdf(rng: random.Random, n: int):
    """(preferences, cdf rows) drawn from a random doubly stochastic allocation."""
    prefs = tuple(random_permutation(rng, n) for _ in range(n))
    T = random_doubly_stochastic(rng, n)
    rows = []
    for x in range(n):
        acc, cum = Fraction(0), []
        for y in prefs[x]:
            acc += T[x][y]
            cum.append(acc)
        rows.append(tuple(cum))
    return prefs, tuple(rows)


def point_instance(prefs, merit, utility=None) -> Instance:
    n = len(prefs)
    utility = utility or [[0] * n for _ in range(n)]
    return Instance(
        individuals=tuple(f"x{i + 1}" for i in range(n)),
        resources=tuple(f"y{i + 1}" for i in range(n)),
        preferences=tuple(tuple(p) for p in prefs),
        merits=DiscreteMixture((Scenario(Fraction(1), as_matrix(merit)),)),
        utility=as_matrix(utility),
    )


def point_parametric(prefs, merit) -> Instance:
    n = len(prefs)
    return Instance(
        individuals=tuple(f"x{i + 1}" for i in range(n)),
        resources=tuple(f"y{i + 1}" for i in range(n)),
        preferences=tuple(tuple(p) for p in prefs),
        merits=IndependentParametric(tuple(tuple(Point(Fraction(v)) for v in row) for row in merit)),
        utility=as_matrix([[0] * n for _ in range(n)]),
    )


# --- ranking fixtures with tight robustness bounds ---------------------------


def ranking_instance(n: int, scenarios, utility) -> Instance:
    """Common preference order y1 > y2 > ...; each scenario gives one merit per individual."""
    mix = tuple(
        Scenario(Fraction(p), tuple(tuple(Fraction(v) for _ in range(n)) for v in merits))
        for p, merits in scenarios
    )
    return Instance(
        individuals=tuple(f"x{i + 1}" for i in range(n)),
        resources=tuple(f"y{i + 1}" for i in range(n)),
        preferences=tuple(tuple(range(n)) for _ in range(n)),
        merits=DiscreteMixture(mix),
        utility=as_matrix(utility),
    )


def tightness_utility_instance(n: int, eps: Fraction) -> Instance:
    """Individuals 1 and 2 swap the top merit w.p. eps; mu is 1 only for (1, y2)."""
    rest = [n - i for i in range(3, n + 1)]
    mu = [[0] * n for _ in range(n)]
    mu[0][1] = 1
    return ranking_instance(
        n, [(1 - eps, [n, n - 1] + rest), (eps, [n - 1, n] + rest)], mu
    )


def tightness_fairness_instance(n: int) -> Instance:
    """Individual i deterministically has the i-th highest merit."""
    mu = [[0] * n for _ in range(n)]
    mu[0][1] = 1
    return ranking_instance(n, [(1, [n - i for i in range(n)])], mu)


def tightness_perturbed_instance(n: int, eps: Fraction) -> Instance:
    """W.p. eps/2 individual 1 drops to the bottom and everyone else moves up one place."""
    base = [n - i for i in range(n)]
    shifted = [0] + [n - i + 1 for i in range(1, n)]
    return ranking_instance(n, [(1 - eps / 2, base), (eps / 2, shifted)], [[0] * n] * n)


def tightness_lhat_literal(n: int, eps: Fraction):
    """The perturbed CDF written out entry by entry."""
    h = eps / 2
    rows = [tuple([1 - h] * (n - 1) + [Fraction(1)])]
    for x in range(1, n):
        row = []
        for k in range(1, n + 1):
            if k < x:
                row.append(Fraction(0))
            elif k == x:
                row.append(h)
            else:
                row.append(Fraction(1))
        rows.append(tuple(row))
    return tuple(rows)
