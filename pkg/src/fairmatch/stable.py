"""Deferred acceptance, stability and merit-fairness checks."""

from __future__ import annotations

from collections import deque
from typing import Sequence

from .merit import MeritSample, induced_resource_rankings
from .model import Instance, Matching, Matrix


def _rank_table(orders: Sequence[Sequence[int]]) -> list[list[int]]:
    # orders[a] lists the other side best-first; table[a][b] is b's 0-based position
    table = []
    for order in orders:
        row = [0] * len(order)
        for pos, b in enumerate(order):
            row[b] = pos
        table.append(row)
    return table


def gale_shapley(
    prefs: Sequence[Sequence[int]], rranks: Sequence[Sequence[int]]
) -> Matching:
    """Individual-proposing deferred acceptance.

    ``prefs[x]`` lists resources best-first for individual ``x``; ``rranks[y]``
    lists individuals best-first for resource ``y``. Free individuals propose
    in ascending index order. Returns the individual-optimal stable matching.
    """
    n = len(prefs)
    prio = _rank_table(rranks)
    next_choice = [0] * n
    holder = [-1] * len(rranks)
    free = deque(range(n))
    while free:
        x = free.popleft()
        y = prefs[x][next_choice[x]]
        next_choice[x] += 1
        cur = holder[y]
        if cur < 0:
            holder[y] = x
        elif prio[y][x] < prio[y][cur]:
            holder[y] = x
            free.append(cur)
        else:
            free.append(x)
    match = [0] * n
    for y, x in enumerate(holder):
        match[x] = y
    return tuple(match)


def blocking_pairs(
    M: Matching, prefs: Sequence[Sequence[int]], rranks: Sequence[Sequence[int]]
) -> list[tuple[int, int]]:
    r = _rank_table(prefs)
    prio = _rank_table(rranks)
    owner = {y: x for x, y in enumerate(M)}
    return [
        (x, y)
        for x in range(len(M))
        for y in range(len(prefs[x]))
        if r[x][y] < r[x][M[x]] and prio[y][x] < prio[y][owner[y]]
    ]


def is_stable(
    M: Matching, prefs: Sequence[Sequence[int]], rranks: Sequence[Sequence[int]]
) -> bool:
    return not blocking_pairs(M, prefs, rranks)


def is_fair_matching(M: Matching, V: MeritSample | Matrix, prefs: Sequence[Sequence[int]]) -> bool:
    """Whether no individual is out-ranked on a resource she prefers by someone with less merit.

    Compares raw merits strictly: an equal merit never counts as "less".
    """
    mat = V.matrix if isinstance(V, MeritSample) else V
    r = _rank_table(prefs)
    owner = {y: x for x, y in enumerate(M)}
    for x in range(len(M)):
        for y in range(len(prefs[x])):
            if mat[owner[y]][y] < mat[x][y] and r[x][y] < r[x][M[x]]:
                return False
    return True


def fair_matching_for_sample(inst: Instance, V: MeritSample | Matrix) -> Matching:
    return gale_shapley(inst.preferences, induced_resource_rankings(V))
