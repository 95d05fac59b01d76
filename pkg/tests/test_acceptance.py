"""Exit criteria of the package, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed as they happen and
again in the terminal summary.
"""

import itertools
import json
import random
import time
from dataclasses import replace
from fractions import Fraction

import pytest

from fairmatch import flowlp
from fairmatch.audit import check_estimation_bounds, fairness_report
from fairmatch.bvn import decompose
from fairmatch.cli import main, sweep_rows
from fairmatch.estimate import (
    FairnessCdf,
    adjust_cdf,
    cdf_to_pdf,
    estimate_fairness_cdf,
    exact_fairness_cdf,
    required_samples,
)
from fairmatch.flowlp import build_circulation, solve_fair_lp, utility_max_matching
from fairmatch.gen import gen_mixture
from fairmatch.merit import induced_resource_rankings
from fairmatch.model import as_matrix
from fairmatch.stable import fair_matching_for_sample, is_fair_matching, is_stable

import conftest
from helpers import (
    TWO_SCENARIO_L,
    FIXTURES,
    two_scenario,
    brute_fair_set,
    brute_max_utility,
    brute_stable_set,
    cdf_of_matching,
    random_doubly_stochastic,
    random_permutation,
    random_valid_cdf,
    tightness_fairness_instance,
    tightness_lhat_literal,
    tightness_perturbed_instance,
    tightness_utility_instance,
)

pytestmark = pytest.mark.acceptance

PHI_QUARTERS = [Fraction(k, 4) for k in range(5)]


def test_two_scenario_oracle(criterion, capsys):
    with criterion("1 two-scenario oracle") as c:
        start = time.perf_counter()
        code = main(["oracle", str(FIXTURES / "two_scenario.json")])
        elapsed = time.perf_counter() - start
        doc = json.loads(capsys.readouterr().out)
        got = as_matrix(doc["entries"])
        assert code == 0
        assert got == as_matrix([["1/10", "1/10", 1], [0, "9/10", 1], ["1/10", 1, 1]])
        assert elapsed < 1, f"took {elapsed:.3f}s"
        c.detail = f"exact match, {elapsed * 1000:.0f} ms"


def test_fair_equals_stable(criterion):
    with criterion("2 fair matchings = stable matchings") as c:
        rng = random.Random(2)
        discrepancies = 0
        for trial in range(100):
            n = (2, 3, 4)[trial % 3]
            prefs = tuple(random_permutation(rng, n) for _ in range(n))
            cols = [random_permutation(rng, n) for _ in range(n)]
            V = as_matrix([[cols[y][x] * 3 + 1 for y in range(n)] for x in range(n)])
            rr = induced_resource_rankings(V)
            fair = {M for M in itertools.permutations(range(n)) if is_fair_matching(M, V, prefs)}
            stable = {M for M in itertools.permutations(range(n)) if is_stable(M, prefs, rr)}
            # the library's predicates must also agree with literal brute-force checks
            if fair != stable or fair != brute_fair_set(prefs, V) or stable != brute_stable_set(prefs, V):
                discrepancies += 1
        assert discrepancies == 0
        c.detail = "100 instances, 0 discrepancies"


def _explicit_flow(net, inst_prefs, T, phi):
    """Route the PDF through the network: phi*jump at rank k to its own resource, the rest from k=n."""
    n = net.n
    D = net.cap_scale
    index = {(a.tail, a.head): i for i, a in enumerate(net.arcs)}
    flows = [0] * len(net.arcs)
    for x in range(n):
        for k in range(1, n + 1):
            flows[index[net.source, net.rank_node(x, k)]] = net.supply(x, k)
            y = inst_prefs[x][k - 1]
            flows[index[net.rank_node(x, k), net.resource_node(y)]] += phi * T[x][y] * D
        for y in range(n):
            flows[index[net.rank_node(x, n), net.resource_node(y)]] += (1 - phi) * T[x][y] * D
    for y in range(n):
        flows[index[net.resource_node(y), net.sink]] = D
    # capacities are integral but a feasible LP point may route fractional flow
    balance = [0] * net.node_count
    for f, a in zip(flows, net.arcs):
        assert 0 <= f <= a.capacity
        balance[a.tail] -= f
        balance[a.head] += f
    assert balance[net.source] == -n * D and balance[net.sink] == n * D
    assert all(b == 0 for v, b in enumerate(balance) if v not in (net.source, net.sink))


def test_pdf_feasible_for_lp(criterion):
    with criterion("3 pdf feasible for the fairness LP") as c:
        rng = random.Random(3)
        checked = 0
        for _ in range(100):
            n = rng.randint(1, 7)
            prefs, rows = random_valid_cdf(rng, n)
            l = FairnessCdf(rows)
            T = cdf_to_pdf(l, prefs)
            inst = replace(gen_mixture(n, 1, rng.randrange(10**6)), preferences=prefs)
            for phi in PHI_QUARTERS:
                assert all(v >= 0 for r in T for v in r)
                assert all(sum(r) == 1 for r in T)
                assert all(sum(T[x][y] for x in range(n)) == 1 for y in range(n))
                for x in range(n):
                    for k in range(1, n + 1):
                        assert sum(T[x][y] for y in prefs[x][:k]) >= phi * rows[x][k - 1]
                net = build_circulation(inst, l, phi)
                _explicit_flow(net, prefs, T, phi)
                flowlp.solve_min_cost_flow(net)  # raises if the supply cannot be routed
                checked += 1
        c.detail = f"{checked} (cdf, phi) pairs"


def _perturbation(inst, l, eps, rng, flip):
    """CDF at sup-distance exactly eps/2 from l, moving eps/2 mass from one fair matching to another."""
    n = inst.n
    scenarios = inst.merits.scenarios
    j = max(range(len(scenarios)), key=lambda i: scenarios[i].prob)
    assert scenarios[j].prob >= eps / 2
    base = fair_matching_for_sample(inst, scenarios[j].matrix)
    if flip:
        other = tuple(base[(x + 1) % n] for x in range(n))
    else:
        other = base
        while other == base:
            other = random_permutation(rng, n)
    h = eps / 2
    lb = cdf_of_matching(inst.preferences, base)
    lq = cdf_of_matching(inst.preferences, other)
    rows = tuple(
        tuple(v + h * (q - b) for v, q, b in zip(rv, rq, rb)) for rv, rq, rb in zip(l.entries, lq, lb)
    )
    return FairnessCdf(rows, "estimated")


def test_estimation_bounds(criterion):
    with criterion("4 bounds under eps/2 perturbations") as c:
        rng = random.Random(4)
        start = time.perf_counter()
        worst_fair = worst_util = None
        for trial in range(200):
            n = 3 + trial % 6
            eps = (Fraction(1, 10), Fraction(1, 20))[(trial // 6) % 2]
            phi = (Fraction(1, 2), Fraction(1))[(trial // 12) % 2]
            inst = gen_mixture(n, rng.randint(2, 4), rng.randrange(10**9))
            l = exact_fairness_cdf(inst)
            lhat = _perturbation(inst, l, eps, rng, flip=trial % 2 == 0)
            rep = check_estimation_bounds(inst, l, lhat, eps, phi)
            assert rep.max_error == eps / 2
            assert not rep.vacuous and not rep.partial
            assert rep.feasible
            assert rep.min_fairness_ratio >= phi * (1 + eps / 2) / (n * eps + 1)
            assert rep.utility >= rep.optimal_utility / (phi * n * eps + 1)
            slack_f = rep.min_fairness_ratio / rep.fairness_bound
            slack_u = rep.utility / rep.utility_bound if rep.utility_bound else None
            worst_fair = slack_f if worst_fair is None else min(worst_fair, slack_f)
            if slack_u is not None:
                worst_util = slack_u if worst_util is None else min(worst_util, slack_u)
        elapsed = time.perf_counter() - start
        assert elapsed < 60, f"took {elapsed:.1f}s"
        c.detail = (
            f"200 pairs in {elapsed:.1f}s; tightest fairness ratio/bound {float(worst_fair):.4f}, "
            f"utility {float(worst_util):.4f}"
        )


def test_tightness(criterion):
    with criterion("5 tightness fixtures") as c:
        cases = 0
        for n in (3, 5, 10):
            for eps in (Fraction(1, 10), Fraction(1, 100)):
                literal = tightness_lhat_literal(n, eps)
                lhat = FairnessCdf(literal, "estimated")
                # the perturbed CDF is itself the entitlement of a merit distribution
                assert exact_fairness_cdf(tightness_perturbed_instance(n, eps)).entries == literal
                ltil = adjust_cdf(lhat, eps)

                inst_u = tightness_utility_instance(n, eps)
                truth_u = exact_fairness_cdf(inst_u)
                assert truth_u.entries[0][:2] == (1 - eps, 1) and truth_u.entries[1][0] == eps
                assert truth_u.max_abs_diff(lhat) == eps / 2
                _, u_true = solve_fair_lp(inst_u, truth_u, Fraction(1))
                _, u_adj = solve_fair_lp(inst_u, ltil, Fraction(1))
                assert u_true == eps and u_adj == eps / (n * eps + 1)
                assert u_adj / u_true == 1 / (n * eps + 1)

                inst_f = tightness_fairness_instance(n)
                truth_f = exact_fairness_cdf(inst_f)
                assert truth_f.entries == cdf_of_matching(inst_f.preferences, tuple(range(n)))
                assert truth_f.max_abs_diff(lhat) == eps / 2
                P, _ = solve_fair_lp(inst_f, ltil, Fraction(1))
                ratio = fairness_report(P, truth_f, inst_f.preferences).ratios[0][0]
                assert ratio == (1 + eps / 2) / (n * eps + 1)
                cases += 1
        c.detail = f"{cases} (n, eps) cases, exact equalities"


def test_bvn(criterion):
    with criterion("6 BvN decomposition") as c:
        rng = random.Random(6)
        most = 0
        for _ in range(100):
            n = rng.randint(1, 10)
            P = random_doubly_stochastic(rng, n, rng.randint(1, 2 * n + 2))
            lot = decompose(P)
            assert lot.marginals() == P
            assert sum(w for w, _ in lot.components) == 1
            assert len(lot.components) <= max(1, n * n - 2 * n + 2)
            most = max(most, len(lot.components))
        c.detail = f"100 matrices, max {most} components"


def test_dominance_and_monotonicity(criterion):
    with criterion("7 dominance and monotonicity") as c:
        rng = random.Random(7)
        grid = [Fraction(k, 10) for k in range(11)]
        for _ in range(50):
            inst = gen_mixture(rng.randint(2, 6), rng.randint(1, 4), rng.randrange(10**9))
            rows = sweep_rows(inst, exact_fairness_cdf(inst), grid)
            lp = [r[1] for r in rows]
            assert all(a >= b for a, b in zip(lp, lp[1:]))
            assert all(r[1] >= r[2] for r in rows)
        inst = two_scenario()
        (_, lp1, mix1, _), = sweep_rows(inst, FairnessCdf(TWO_SCENARIO_L), [Fraction(1)])
        assert lp1 == Fraction(9, 10) and mix1 == 0
        c.detail = "50 instances x 11 phis; two-scenario lp 9/10 vs mix 0"


def test_sampling_concentration(criterion):
    with criterion("8 sampling concentration") as c:
        inst = two_scenario()
        truth = exact_fairness_cdf(inst)
        m = required_samples(0.05, 2, 3)
        errors = [estimate_fairness_cdf(inst, m, seed).max_abs_diff(truth) for seed in range(9)]
        good = sum(e <= Fraction(5, 100) for e in errors)
        assert good >= 8
        assert required_samples(0.1, 1, 100) == 530
        c.detail = f"m={m}, {good}/9 runs within 0.05 (max err {float(max(errors)):.4f})"


def test_flow_solver_oracle(criterion):
    with criterion("9 flow solver vs brute force") as c:
        rng = random.Random(9)
        for trial in range(100):
            n = 1 + trial % 6
            inst = gen_mixture(n, 1, rng.randrange(10**9))
            if trial % 2:
                mu = as_matrix([[Fraction(rng.randint(0, 60), rng.randint(1, 7)) for _ in range(n)] for _ in range(n)])
                inst = replace(inst, utility=mu)
            m, u = utility_max_matching(inst)
            assert u == brute_max_utility(inst.utility)
            assert u == sum(inst.utility[x][m[x]] for x in range(n))
        stats = conftest.SOLVER_STATS
        assert stats["calls"] > 0 and stats["certified"] == stats["calls"]
        c.detail = f"100 instances; {stats['certified']} solves certified so far"
