"""Birkhoff-von Neumann decomposition and lottery sampling."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Sequence

from .merit import draw_weighted, sample_rng
from .model import Matching, MatchingLottery

FLOAT_ZERO = 1e-12
FLOAT_SUM_TOL = 1e-9


class NotDoublyStochastic(ValueError):
    pass


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> list[int]:
    """Maximum bipartite matching; returns ``match[left] = right`` or -1."""
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    INF = n_left + 1

    while True:
        dist = [INF] * n_left
        q = deque()
        for u in range(n_left):
            if match_l[u] < 0:
                dist[u] = 0
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w < 0:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            return match_l

        it = [0] * n_left

        def augment(u: int) -> bool:
            # iterative DFS along the BFS layering
            stack = [u]
            path: list[tuple[int, int]] = []
            while stack:
                u = stack[-1]
                if it[u] == len(adj[u]):
                    dist[u] = INF
                    stack.pop()
                    if path:
                        path.pop()
                    continue
                v = adj[u][it[u]]
                it[u] += 1
                w = match_r[v]
                if w < 0:
                    path.append((u, v))
                    for a, b in path:
                        match_l[a] = b
                        match_r[b] = a
                    return True
                if dist[w] == dist[u] + 1:
                    path.append((u, v))
                    stack.append(w)
            return False

        for u in range(n_left):
            if match_l[u] < 0:
                augment(u)


def _check(P: Sequence[Sequence], exact: bool) -> int:
    n = len(P)
    if n == 0 or any(len(row) != n for row in P):
        raise NotDoublyStochastic("matrix must be square and non-empty")
    tol = 0 if exact else FLOAT_SUM_TOL
    for x, row in enumerate(P):
        if any(v < -tol or v > 1 + tol for v in row):
            raise NotDoublyStochastic(f"row {x} has an entry outside [0, 1]")
        if abs(sum(row) - 1) > tol:
            raise NotDoublyStochastic(f"row {x} sums to {sum(row)}")
    for y in range(n):
        s = sum(P[x][y] for x in range(n))
        if abs(s - 1) > tol:
            raise NotDoublyStochastic(f"column {y} sums to {s}")
    return n


def decompose(P: Sequence[Sequence[Fraction | float]]) -> MatchingLottery:
    """Write ``P`` as a convex combination of permutation matrices.

    Rational input is decomposed exactly. Float input is accepted within
    1e-9 on the row and column sums; entries below 1e-12 count as zero and the
    weights are renormalized to sum to one.
    """
    exact = all(isinstance(v, (int, Fraction)) for row in P for v in row)
    n = _check(P, exact)
    rest = [[Fraction(v) if exact else float(v) for v in row] for row in P]
    zero = 0 if exact else FLOAT_ZERO
    components: list[tuple] = []
    remaining = Fraction(1) if exact else 1.0
    while remaining > zero:
        adj = [[y for y in range(n) if rest[x][y] > zero] for x in range(n)]
        match = hopcroft_karp(adj, n)
        if any(y < 0 for y in match):
            if exact:
                raise NotDoublyStochastic("support has no perfect matching")
            break
        w = min(rest[x][match[x]] for x in range(n))
        for x in range(n):
            rest[x][match[x]] -= w
        remaining -= w
        components.append((w, tuple(match)))
    if not exact:
        total = sum(w for w, _ in components)
        components = [(w / total, m) for w, m in components]
    return MatchingLottery(tuple(components))


def draw_matching(lottery: MatchingLottery, seed: int, index: int) -> Matching:
    """Draw one matching by weight; deterministic in ``(seed, index)``."""
    rng = sample_rng(seed, index)
    weights = [Fraction(w) for w, _ in lottery.components]
    return lottery.components[draw_weighted(rng, weights)][1]
