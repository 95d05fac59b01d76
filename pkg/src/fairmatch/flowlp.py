"""The phi-fair utility LP as an exact min-cost flow.

Network layout: a super-source feeds one node per (individual, rank) pair
``u[x,k]`` with the probability mass that must land on x's top ``k`` choices
but not on her top ``k-1``; ``u[x,k]`` may send flow to any resource x ranks
``k`` or better; every resource node ``v[y]`` forwards exactly one unit to the
super-sink. All quantities are scaled to integers (capacities by ``D``, costs
by ``C``) and costs are negated utilities, so a min-cost flow is a max-utility
marginal matrix.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .estimate import FairnessCdf, check_cdf
from .model import Instance, Matching, Matrix


class InfeasibleNetwork(RuntimeError):
    pass


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity: int
    cost: int


@dataclass(frozen=True)
class CirculationNetwork:
    n: int
    node_count: int
    source: int
    sink: int
    arcs: tuple[Arc, ...]
    # arc index -> (x, y) for arcs that carry assignment mass to a resource
    assignment: dict
    cap_scale: int
    cost_scale: int
    compact: bool = False

    def rank_node(self, x: int, k: int) -> int:
        return 2 + x * self.n + (k - 1)

    def resource_node(self, y: int) -> int:
        return 2 + self.n * self.n + y

    @property
    def total_supply(self) -> int:
        return sum(a.capacity for a in self.arcs if a.tail == self.source)

    def supply(self, x: int, k: int) -> int:
        node = self.rank_node(x, k)
        return sum(a.capacity for a in self.arcs if a.tail == self.source and a.head == node)


@dataclass(frozen=True)
class FlowSolution:
    flows: tuple[int, ...]
    potentials: tuple[int, ...]
    cost: int
    objective: Fraction  # cost / (C * D), i.e. minus the utility


def _lcm_of_denominators(values) -> int:
    return math.lcm(1, *(Fraction(v).denominator for v in values))


def _assemble(
    inst: Instance, supplies: Sequence[Sequence[Fraction]], compact: bool
) -> CirculationNetwork:
    """Network for per-(x, k) supplies given as exact fractions (k is 1-based)."""
    n = inst.n
    D = _lcm_of_denominators(v for row in supplies for v in row)
    C = _lcm_of_denominators(v for row in inst.utility for v in row)
    source, sink = 0, 1

    def rank_node(x: int, k: int) -> int:
        return 2 + x * n + (k - 1)

    def resource_node(y: int) -> int:
        return 2 + n * n + y

    big = n * D
    arcs: list[Arc] = []
    assignment: dict[int, tuple[int, int]] = {}
    for x in range(n):
        for k in range(1, n + 1):
            # zero-supply nodes are kept on purpose
            arcs.append(Arc(source, rank_node(x, k), int(supplies[x][k - 1] * D), 0))
    for x in range(n):
        pref = inst.preferences[x]
        for k in range(1, n + 1):
            if compact:
                y = pref[k - 1]
                assignment[len(arcs)] = (x, y)
                arcs.append(Arc(rank_node(x, k), resource_node(y), big, int(-inst.utility[x][y] * C)))
                if k > 1:
                    arcs.append(Arc(rank_node(x, k), rank_node(x, k - 1), big, 0))
            else:
                for y in pref[:k]:
                    assignment[len(arcs)] = (x, y)
                    arcs.append(
                        Arc(rank_node(x, k), resource_node(y), big, int(-inst.utility[x][y] * C))
                    )
    for y in range(n):
        arcs.append(Arc(resource_node(y), sink, D, 0))
    return CirculationNetwork(
        n=n,
        node_count=2 + n * n + n,
        source=source,
        sink=sink,
        arcs=tuple(arcs),
        assignment=assignment,
        cap_scale=D,
        cost_scale=C,
        compact=compact,
    )


def fair_supplies(l: FairnessCdf, phi: Fraction) -> list[list[Fraction]]:
    n = l.n
    out = []
    for x in range(n):
        row = [phi * l.jump(x, k) for k in range(1, n + 1)]
        row[-1] += 1 - phi
        out.append(row)
    return out


def build_circulation(
    inst: Instance, l: FairnessCdf, phi: Fraction, *, compact: bool = False
) -> CirculationNetwork:
    phi = Fraction(phi)
    if not 0 <= phi <= 1:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    if not inst.is_square:
        raise ValueError("pad the instance before building the network")
    check_cdf(l, inst.preferences)
    return _assemble(inst, fair_supplies(l, phi), compact)


# --- successive shortest paths ---------------------------------------------


class _Residual:
    """Paired forward/backward residual edges; edge ``2i`` is arc ``i``."""

    def __init__(self, net: CirculationNetwork):
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(net.node_count)]
        for a in net.arcs:
            self.adj[a.tail].append(len(self.to))
            self.to.append(a.head)
            self.cap.append(a.capacity)
            self.cost.append(a.cost)
            self.adj[a.head].append(len(self.to))
            self.to.append(a.tail)
            self.cap.append(0)
            self.cost.append(-a.cost)


def _initial_potentials(res: _Residual, node_count: int) -> list[int]:
    # Bellman-Ford from a virtual root joined to every node at cost 0
    pi = [0] * node_count
    for _ in range(node_count):
        changed = False
        for u in range(node_count):
            pu = pi[u]
            for e in res.adj[u]:
                if res.cap[e] > 0 and pu + res.cost[e] < pi[res.to[e]]:
                    pi[res.to[e]] = pu + res.cost[e]
                    changed = True
        if not changed:
            return pi
    raise InfeasibleNetwork("negative cycle in the initial network")


def solve_min_cost_flow(net: CirculationNetwork) -> FlowSolution:
    """Min-cost flow routing the full supply from source to sink.

    Successive shortest paths with Dijkstra on reduced costs; potentials start
    from one Bellman-Ford pass. The returned potentials certify optimality.
    """
    res = _Residual(net)
    N = net.node_count
    pi = _initial_potentials(res, N)
    required = net.total_supply
    sent = 0
    while sent < required:
        dist: list[Optional[int]] = [None] * N
        parent = [-1] * N
        dist[net.source] = 0
        heap = [(0, net.source)]
        done = [False] * N
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in res.adj[u]:
                if res.cap[e] <= 0:
                    continue
                v = res.to[e]
                nd = d + res.cost[e] + pi[u] - pi[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
        if dist[net.sink] is None:
            raise InfeasibleNetwork(
                f"only {Fraction(sent, net.cap_scale)} of {Fraction(required, net.cap_scale)} "
                "units of supply can be routed"
            )
        reach_max = max(d for d in dist if d is not None)
        for v in range(N):
            pi[v] += dist[v] if dist[v] is not None else reach_max
        push = required - sent
        v = net.sink
        while v != net.source:
            e = parent[v]
            push = min(push, res.cap[e])
            v = res.to[e ^ 1]
        v = net.sink
        while v != net.source:
            e = parent[v]
            res.cap[e] -= push
            res.cap[e ^ 1] += push
            v = res.to[e ^ 1]
        sent += push

    flows = tuple(res.cap[2 * i + 1] for i in range(len(net.arcs)))
    cost = sum(f * a.cost for f, a in zip(flows, net.arcs))
    return FlowSolution(
        flows=flows,
        potentials=tuple(pi),
        cost=cost,
        objective=Fraction(cost, net.cap_scale * net.cost_scale),
    )


def verify_optimality(net: CirculationNetwork, sol: FlowSolution) -> bool:
    """Check feasibility and that no residual arc has negative reduced cost."""
    if len(sol.flows) != len(net.arcs) or len(sol.potentials) != net.node_count:
        return False
    balance = [0] * net.node_count
    pi = sol.potentials
    for f, a in zip(sol.flows, net.arcs):
        if not 0 <= f <= a.capacity:
            return False
        balance[a.tail] -= f
        balance[a.head] += f
        reduced = a.cost + pi[a.tail] - pi[a.head]
        if f < a.capacity and reduced < 0:
            return False
        if f > 0 and reduced > 0:
            return False
    total = net.total_supply
    if balance[net.source] != -total or balance[net.sink] != total:
        return False
    return all(b == 0 for v, b in enumerate(balance) if v not in (net.source, net.sink))


def flow_to_marginals(net: CirculationNetwork, sol: FlowSolution) -> Matrix:
    n = net.n
    acc = [[0] * n for _ in range(n)]
    for i, (x, y) in net.assignment.items():
        acc[x][y] += sol.flows[i]
    D = net.cap_scale
    return tuple(tuple(Fraction(v, D) for v in row) for row in acc)


def solve_fair_lp_full(
    inst: Instance, l: FairnessCdf, phi: Fraction, *, compact: bool = False
) -> tuple[Matrix, Fraction, CirculationNetwork, FlowSolution]:
    net = build_circulation(inst, l, phi, compact=compact)
    sol = solve_min_cost_flow(net)
    P = flow_to_marginals(net, sol)
    return P, -sol.objective, net, sol


def solve_fair_lp(
    inst: Instance, l: FairnessCdf, phi: Fraction, *, compact: bool = False
) -> tuple[Matrix, Fraction]:
    """Utility-maximizing doubly stochastic P whose top-k mass is >= phi * ell[x, k]."""
    P, utility, _, _ = solve_fair_lp_full(inst, l, phi, compact=compact)
    return P, utility


def utility_max_matching(inst: Instance) -> tuple[Matching, Fraction]:
    """Maximum-utility perfect matching, from an integral flow with unit supplies."""
    if not inst.is_square:
        raise ValueError("pad the instance first")
    n = inst.n
    supplies = [[Fraction(0)] * (n - 1) + [Fraction(1)] for _ in range(n)]
    net = _assemble(inst, supplies, compact=False)
    sol = solve_min_cost_flow(net)
    P = flow_to_marginals(net, sol)
    match = tuple(next(y for y in range(n) if P[x][y] == 1) for x in range(n))
    return match, -sol.objective
