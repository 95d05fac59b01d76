"""Command-line entry point: ``fairmatch <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 exact computation requested for a
distribution without finite support.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import sys
from fractions import Fraction
from typing import IO, Iterator, Optional, Sequence

from .audit import fairness_report
from .baselines import mix_marginals
from .bvn import decompose, draw_matching
from .estimate import (
    CdfError,
    FairnessCdf,
    adjust_cdf,
    check_cdf,
    estimate_fairness_cdf,
    exact_fairness_cdf,
    read_cdf,
    required_samples,
    write_cdf,
)
from .flowlp import InfeasibleNetwork, solve_fair_lp
from .gen import gen_mixture, gen_normal
from .merit import UnsupportedDistribution, is_finite_support
from .model import (
    Instance,
    InstanceError,
    fraction_str,
    pad_instance,
    parse_instance,
    parse_solution,
    to_fraction,
    write_instance,
    write_solution,
)

log = logging.getLogger("fairmatch")

EXIT_INVALID = 1
EXIT_UNSUPPORTED = 2


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except InstanceError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _decimal(q) -> str:
    if q == math.inf:
        return "inf"
    return f"{float(q):.12g}"


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return pad_instance(parse_instance(fh))


def parse_grid(text: str) -> list[Fraction]:
    """``start:stop:step`` with inclusive stop, or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [_rational(parts[0])]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (_rational(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or invalid grid {text!r}")
    count = int((stop - start) / step)
    return [start + i * step for i in range(count + 1)]


# --- fairness CDF selection -------------------------------------------------


def _reference_cdf(inst: Instance, args) -> tuple[FairnessCdf, dict]:
    """The CDF the LP enforces, plus provenance for the audit block."""
    if getattr(args, "cdf", None):
        with open(args.cdf, encoding="utf-8") as fh:
            cached = read_cdf(fh)
        check_cdf(cached, inst.preferences)
        if cached.kind == "estimated":
            return _adjusted(cached, args)
        return cached, {"mode": f"cached-{cached.kind}"}
    if args.mode == "exact-oracle":
        return exact_fairness_cdf(inst), {"mode": "exact-oracle"}
    if args.epsilon is None:
        raise InstanceError("--epsilon", "sampled mode needs --epsilon")
    m = args.samples or required_samples(args.epsilon / 2, args.kappa, max(inst.n, 2))
    log.info("drawing %d merit samples", m)
    lhat = estimate_fairness_cdf(inst, m, args.seed, workers=args.workers)
    lhat = FairnessCdf(lhat.entries, lhat.kind, m, None, args.kappa)
    return _adjusted(lhat, args)


def _adjusted(lhat: FairnessCdf, args) -> tuple[FairnessCdf, dict]:
    if args.epsilon is None:
        raise InstanceError("--epsilon", "an estimated CDF needs --epsilon")
    ltil = adjust_cdf(lhat, args.epsilon)
    info = {
        "mode": "sampled",
        "samples": lhat.sample_count,
        "epsilon": fraction_str(args.epsilon),
        "kappa": fraction_str(Fraction(args.kappa)),
        "seed": args.seed,
    }
    return ltil, info


# --- commands ---------------------------------------------------------------


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    l = exact_fairness_cdf(inst)
    with _output(args.out) as fh:
        write_cdf(l, fh)
    return 0


def cmd_estimate(args) -> int:
    inst = _load_instance(args.instance)
    if args.samples:
        m = args.samples
    elif args.epsilon is not None:
        m = required_samples(args.epsilon, args.kappa, max(inst.n, 2))
    else:
        raise InstanceError("--samples", "give --samples or --epsilon")
    lhat = estimate_fairness_cdf(inst, m, args.seed, workers=args.workers)
    with _output(args.out) as fh:
        write_cdf(FairnessCdf(lhat.entries, lhat.kind, m, None, args.kappa), fh)
    return 0


def _truth_block(inst: Instance, P, phi: Fraction, info: dict, args) -> Optional[dict]:
    """Audit against the exact entitlement when the distribution has finite support."""
    if not is_finite_support(inst.merits):
        return None
    truth = exact_fairness_cdf(inst)
    _, optimum = solve_fair_lp(inst, truth, phi, compact=args.compact_network)
    if info["mode"] == "sampled":
        eps = args.epsilon
        n = inst.n
        fb = phi * (1 + eps / 2) / (n * eps + 1)
        ub = 1 / (phi * n * eps + 1)
    else:
        fb, ub = phi, Fraction(1)
    rep = fairness_report(
        P,
        truth,
        inst.preferences,
        mu=inst.utility,
        reference_utility=optimum,
        fairness_bound=fb,
        utility_bound=ub,
    )
    return rep.to_dict()


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    phi = args.phi
    l, info = _reference_cdf(inst, args)
    P, utility = solve_fair_lp(inst, l, phi, compact=args.compact_network)
    lottery = decompose(P)
    enforced = fairness_report(P, l, inst.preferences, mu=inst.utility, fairness_bound=phi)
    audit = {
        **info,
        "phi": fraction_str(phi),
        "enforced_cdf_kind": l.kind,
        "enforced": enforced.to_dict(),
        "truth": _truth_block(inst, P, phi, info, args),
    }
    with _output(args.out) as fh:
        write_solution(
            P,
            lottery,
            audit,
            fh,
            individuals=inst.individuals,
            resources=inst.resources,
            utility=utility,
        )
    return 0


SWEEP_HEADER = ("phi", "lp_utility", "mix_utility", "min_fairness_ratio")


def sweep_rows(inst: Instance, l: FairnessCdf, grid: Sequence[Fraction], compact: bool = False):
    """Exact (phi, lp_utility, mix_utility, min_fairness_ratio) per grid point."""
    rows = []
    for phi in grid:
        P, lp_u = solve_fair_lp(inst, l, phi, compact=compact)
        _, mix_u = mix_marginals(inst, l, phi)
        rep = fairness_report(P, l, inst.preferences)
        rows.append((phi, lp_u, mix_u, rep.min_ratio))
    return rows


def cmd_sweep(args) -> int:
    inst = _load_instance(args.instance)
    l, _ = _reference_cdf(inst, args)
    rows = sweep_rows(inst, l, args.grid, args.compact_network)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow([_decimal(v) for v in row])
    return 0


def cmd_sample(args) -> int:
    with open(args.solution, encoding="utf-8") as fh:
        sol = parse_solution(fh)
    with _output(args.out) as fh:
        for i in range(args.count):
            m = draw_matching(sol.lottery, args.seed, i)
            mapping = {sol.individuals[x]: sol.resources[y] for x, y in enumerate(m)}
            fh.write(json.dumps(mapping) + "\n")
    return 0


def cmd_audit(args) -> int:
    inst = _load_instance(args.instance)
    with open(args.solution, encoding="utf-8") as fh:
        sol = parse_solution(fh)
    if sol.individuals != inst.individuals or sol.resources != inst.resources:
        raise InstanceError("$", "solution and instance identifiers differ")
    if args.cdf:
        with open(args.cdf, encoding="utf-8") as fh:
            truth = read_cdf(fh)
    else:
        truth = exact_fairness_cdf(inst)
    rep = fairness_report(
        sol.marginals, truth, inst.preferences, mu=inst.utility, fairness_bound=args.phi
    )
    with _output(args.out) as fh:
        json.dump(rep.to_dict(), fh, indent=1)
        fh.write("\n")
    return 0


def cmd_gen(args) -> int:
    if args.dist == "mixture":
        inst = gen_mixture(args.n, args.scenarios, args.seed)
    else:
        inst = gen_normal(args.n, std=args.std, seed=args.seed)
    with _output(args.out) as fh:
        write_instance(inst, fh)
    return 0


# --- argument parsing -------------------------------------------------------


def _add_cdf_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("exact-oracle", "sampled"), default="sampled")
    p.add_argument("--epsilon", type=_rational, help="robustness slack (sampled mode)")
    p.add_argument("--kappa", type=_rational, default=Fraction(1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, help="override the computed sample count")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cdf", help="precomputed CDF JSON (from oracle or estimate)")
    p.add_argument("--compact-network", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairmatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact fairness CDF of a finite-support instance")
    p.add_argument("instance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("estimate", help="Monte-Carlo fairness CDF")
    p.add_argument("instance")
    p.add_argument("--epsilon", type=_rational)
    p.add_argument("--kappa", type=_rational, default=Fraction(1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("solve", help="optimal phi-fair lottery over matchings")
    p.add_argument("instance")
    p.add_argument("--phi", type=_rational, required=True)
    _add_cdf_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="LP vs mixing utility over a phi grid (CSV)")
    p.add_argument("instance")
    p.add_argument("--grid", type=parse_grid, default=parse_grid("0:1:1/10"))
    _add_cdf_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="fairness report of a solution file")
    p.add_argument("solution")
    p.add_argument("instance")
    p.add_argument("--cdf", help="reference CDF (default: exact oracle)")
    p.add_argument("--phi", type=_rational)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sample", help="draw matchings from a solution's lottery")
    p.add_argument("solution")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gen", help="write a synthetic instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scenarios", type=int, default=2)
    p.add_argument("--dist", choices=("mixture", "normal"), default="mixture")
    p.add_argument("--std", type=_rational, default=Fraction(3))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved here
        return EXIT_INVALID if exc.code else 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    problem = None
    if getattr(args, "phi", None) is not None and not 0 <= args.phi <= 1:
        problem = "--phi must lie in [0, 1]"
    elif getattr(args, "epsilon", None) is not None and args.epsilon <= 0:
        problem = "--epsilon must be positive"
    elif getattr(args, "kappa", None) is not None and args.kappa <= 0:
        problem = "--kappa must be positive"
    elif getattr(args, "count", 0) < 0:
        problem = "--count must be non-negative"
    if problem:
        print(f"fairmatch: {problem}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except UnsupportedDistribution as exc:
        print(f"fairmatch: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InstanceError, CdfError, InfeasibleNetwork, ValueError, OSError) as exc:
        print(f"fairmatch: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
