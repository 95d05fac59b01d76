"""Utility-maximizing fair lotteries over bipartite matchings under merit uncertainty."""

from .audit import AuditReport, check_estimation_bounds, fairness_report
from .baselines import mix_marginals, thompson_matching
from .bvn import NotDoublyStochastic, decompose, draw_matching
from .estimate import (
    FairnessCdf,
    adjust_cdf,
    cdf_to_pdf,
    estimate_fairness_cdf,
    exact_fairness_cdf,
    required_samples,
)
from .flowlp import (
    InfeasibleNetwork,
    build_circulation,
    solve_fair_lp,
    solve_min_cost_flow,
    utility_max_matching,
    verify_optimality,
)
from .merit import UnsupportedDistribution, enumerate_scenarios, induced_resource_rankings, sample_merits
from .model import (
    Instance,
    InstanceError,
    MatchingLottery,
    pad_instance,
    parse_instance,
    policy_utility,
    write_solution,
)
from .stable import fair_matching_for_sample, gale_shapley, is_fair_matching, is_stable

__version__ = "0.1.0"
