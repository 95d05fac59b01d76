"""Domain types, instance validation and JSON I/O.

Matrices are tuples of tuples of ``Fraction``. Individuals and resources are
addressed by 0-based index internally; identifiers only appear at the file
boundary. A matching is a tuple ``m`` with ``m[x]`` the resource index of
individual ``x``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import IO, Any, Iterable, Sequence, Union

Matrix = tuple[tuple[Fraction, ...], ...]
Matching = tuple[int, ...]

VIRTUAL_INDIVIDUAL_PREFIX = "~virtual-individual-"
VIRTUAL_RESOURCE_PREFIX = "~virtual-resource-"


class InstanceError(ValueError):
    """Invalid instance or solution file; ``path`` locates the offending value."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MeritTieWarning(UserWarning):
    pass


def to_fraction(value: Any, path: str = "$") -> Fraction:
    """Parse an int, a decimal string, an ``"a/b"`` string or a JSON float exactly."""
    if isinstance(value, bool):
        raise InstanceError(path, f"expected a number, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InstanceError(path, f"non-finite number {value!r}")
        # JSON floats are read with decimal semantics: 0.1 means 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InstanceError(path, f"not a rational literal: {value!r}") from None
    raise InstanceError(path, f"expected a number, got {type(value).__name__}")


def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def as_matrix(rows: Iterable[Iterable[Any]]) -> Matrix:
    return tuple(tuple(to_fraction(v) for v in row) for row in rows)


def permutation_matrix(m: Matching) -> Matrix:
    n = len(m)
    return tuple(
        tuple(Fraction(1) if m[x] == y else Fraction(0) for y in range(n)) for x in range(n)
    )


def policy_utility(P: Matrix, mu: Matrix) -> Fraction:
    """Expected principal utility sum_{x,y} mu[x][y] * P[x][y]."""
    return sum((m * p for mrow, prow in zip(mu, P) for m, p in zip(mrow, prow)), Fraction(0))


# --- merit distributions ----------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    prob: Fraction
    matrix: Matrix


@dataclass(frozen=True)
class DiscreteMixture:
    """Finite support: each scenario is a full merit matrix with its probability."""

    scenarios: tuple[Scenario, ...]


@dataclass(frozen=True)
class Normal:
    mean: Fraction
    std: Fraction


@dataclass(frozen=True)
class Uniform:
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class Point:
    value: Fraction


@dataclass(frozen=True)
class Floor:
    """Merit of a padded (virtual) pair: one below the smallest real merit of the draw."""


Dist = Union[Normal, Uniform, Point, Floor]


@dataclass(frozen=True)
class IndependentParametric:
    entries: tuple[tuple[Dist, ...], ...]

    @property
    def is_point_mass(self) -> bool:
        return all(isinstance(d, (Point, Floor)) for row in self.entries for d in row)


MeritDistribution = Union[DiscreteMixture, IndependentParametric]


def merit_shape(gamma: MeritDistribution) -> tuple[int, int]:
    if isinstance(gamma, DiscreteMixture):
        mat = gamma.scenarios[0].matrix
    else:
        mat = gamma.entries
    return len(mat), (len(mat[0]) if mat else 0)


# --- instance ---------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    individuals: tuple[str, ...]
    resources: tuple[str, ...]
    # per individual, resource indices from best to worst
    preferences: tuple[tuple[int, ...], ...]
    merits: MeritDistribution
    utility: Matrix
    virtual_individuals: int = 0
    virtual_resources: int = 0

    def __post_init__(self) -> None:
        validate_instance(self)

    @property
    def n(self) -> int:
        """Market size; only meaningful once the instance is square."""
        return len(self.individuals)

    @property
    def is_square(self) -> bool:
        return len(self.individuals) == len(self.resources)

    @property
    def real_individuals(self) -> int:
        return len(self.individuals) - self.virtual_individuals

    @property
    def real_resources(self) -> int:
        return len(self.resources) - self.virtual_resources

    @cached_property
    def ranks(self) -> tuple[tuple[int, ...], ...]:
        """``ranks[x][y]`` is r_x(y), 1-based."""
        out = []
        for pref in self.preferences:
            row = [0] * len(pref)
            for i, y in enumerate(pref):
                row[y] = i + 1
            out.append(tuple(row))
        return tuple(out)


def validate_instance(inst: Instance) -> None:
    n_x, n_y = len(inst.individuals), len(inst.resources)
    if n_x == 0 or n_y == 0:
        raise InstanceError("$", "instance needs at least one individual and one resource")
    if len(set(inst.individuals)) != n_x:
        raise InstanceError("$.individuals", "duplicate identifiers")
    if len(set(inst.resources)) != n_y:
        raise InstanceError("$.resources", "duplicate identifiers")
    if len(inst.preferences) != n_x:
        raise InstanceError("$.preferences", f"expected {n_x} preference lists")
    for x, pref in enumerate(inst.preferences):
        if sorted(pref) != list(range(n_y)):
            raise InstanceError(
                f"$.preferences.{inst.individuals[x]}", "not a permutation of the resources"
            )
    if len(inst.utility) != n_x or any(len(row) != n_y for row in inst.utility):
        raise InstanceError("$.utility", f"expected a {n_x}x{n_y} matrix")
    for x, row in enumerate(inst.utility):
        for y, u in enumerate(row):
            if u < 0:
                raise InstanceError(f"$.utility[{x}][{y}]", "negative utility")
    gamma = inst.merits
    if isinstance(gamma, DiscreteMixture):
        if not gamma.scenarios:
            raise InstanceError("$.merits.scenarios", "empty mixture")
        total = Fraction(0)
        for i, sc in enumerate(gamma.scenarios):
            if not 0 < sc.prob <= 1:
                raise InstanceError(f"$.merits.scenarios[{i}].prob", "probability outside (0,1]")
            total += sc.prob
            if len(sc.matrix) != n_x or any(len(r) != n_y for r in sc.matrix):
                raise InstanceError(
                    f"$.merits.scenarios[{i}].matrix", f"expected a {n_x}x{n_y} matrix"
                )
        if total != 1:
            raise InstanceError("$.merits.scenarios", f"probabilities sum to {total}, not 1")
    else:
        if len(gamma.entries) != n_x or any(len(r) != n_y for r in gamma.entries):
            raise InstanceError("$.merits.entries", f"expected a {n_x}x{n_y} table")
        for x, row in enumerate(gamma.entries):
            for y, d in enumerate(row):
                if isinstance(d, Normal) and d.std <= 0:
                    raise InstanceError(f"$.merits.entries[{x}][{y}]", "std must be > 0")
                if isinstance(d, Uniform) and d.hi <= d.lo:
                    raise InstanceError(f"$.merits.entries[{x}][{y}]", "need hi > lo")


def warn_on_ties(inst: Instance) -> bool:
    """Warn if some scenario column has tied merits among real individuals."""
    if not isinstance(inst.merits, DiscreteMixture):
        return False
    n_real = inst.real_individuals
    for i, sc in enumerate(inst.merits.scenarios):
        for y in range(len(inst.resources)):
            col = [sc.matrix[x][y] for x in range(n_real)]
            if len(set(col)) != len(col):
                warnings.warn(
                    f"scenario {i}: tied merits for resource {inst.resources[y]!r}; "
                    "ties are broken by individual index",
                    MeritTieWarning,
                    stacklevel=2,
                )
                return True
    return False


# --- padding ----------------------------------------------------------------


def pad_instance(inst: Instance) -> Instance:
    """Square up an instance with virtual individuals or resources.

    Virtual entities come after the real ones, are ranked last by everyone
    (virtual resources in input order), carry zero utility and a merit below
    every real merit.
    """
    n_x, n_y = len(inst.individuals), len(inst.resources)
    if n_x == n_y:
        return inst
    n = max(n_x, n_y)
    add_x, add_y = n - n_x, n - n_y
    individuals = inst.individuals + tuple(
        f"{VIRTUAL_INDIVIDUAL_PREFIX}{i + 1}" for i in range(add_x)
    )
    resources = inst.resources + tuple(f"{VIRTUAL_RESOURCE_PREFIX}{i + 1}" for i in range(add_y))
    preferences = tuple(pref + tuple(range(n_y, n)) for pref in inst.preferences) + tuple(
        tuple(range(n)) for _ in range(add_x)
    )
    zero = Fraction(0)
    utility = tuple(row + (zero,) * add_y for row in inst.utility) + ((zero,) * n,) * add_x

    gamma = inst.merits
    merits: MeritDistribution
    if isinstance(gamma, DiscreteMixture):
        floor = min(v for sc in gamma.scenarios for row in sc.matrix for v in row) - 1
        merits = DiscreteMixture(
            tuple(
                Scenario(sc.prob, _pad_matrix(sc.matrix, add_x, add_y, floor))
                for sc in gamma.scenarios
            )
        )
    else:
        merits = IndependentParametric(_pad_matrix(gamma.entries, add_x, add_y, Floor()))
    return Instance(
        individuals=individuals,
        resources=resources,
        preferences=preferences,
        merits=merits,
        utility=utility,
        virtual_individuals=inst.virtual_individuals + add_x,
        virtual_resources=inst.virtual_resources + add_y,
    )


def _pad_matrix(mat: Sequence[Sequence[Any]], add_x: int, add_y: int, fill: Any) -> tuple:
    n = len(mat[0]) + add_y
    return tuple(tuple(row) + (fill,) * add_y for row in mat) + ((fill,) * n,) * add_x


# --- instance JSON ----------------------------------------------------------


def _ident(value: Any, path: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InstanceError(path, f"identifier must be a string or integer, got {value!r}")
    return str(value)


def instance_from_dict(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("$", "instance must be a JSON object")
    for key in ("individuals", "resources", "preferences", "merits", "utility"):
        if key not in doc:
            raise InstanceError(f"$.{key}", "missing")
    if not isinstance(doc["individuals"], list) or not isinstance(doc["resources"], list):
        raise InstanceError("$", "individuals and resources must be lists")
    individuals = tuple(_ident(v, f"$.individuals[{i}]") for i, v in enumerate(doc["individuals"]))
    resources = tuple(_ident(v, f"$.resources[{i}]") for i, v in enumerate(doc["resources"]))
    res_index = {r: i for i, r in enumerate(resources)}
    ind_index = {x: i for i, x in enumerate(individuals)}

    raw_prefs = doc["preferences"]
    if not isinstance(raw_prefs, dict):
        raise InstanceError("$.preferences", "must map individual -> resource list")
    preferences = []
    for x in individuals:
        path = f"$.preferences.{x}"
        if x not in raw_prefs:
            raise InstanceError(path, "missing")
        lst = raw_prefs[x]
        if not isinstance(lst, list):
            raise InstanceError(path, "must be a list")
        idx = []
        for j, r in enumerate(lst):
            r = _ident(r, f"{path}[{j}]")
            if r not in res_index:
                raise InstanceError(f"{path}[{j}]", f"unknown resource {r!r}")
            idx.append(res_index[r])
        if sorted(idx) != list(range(len(resources))):
            raise InstanceError(path, "not a permutation of the resources")
        preferences.append(tuple(idx))
    for x in raw_prefs:
        if str(x) not in ind_index:
            raise InstanceError(f"$.preferences.{x}", "unknown individual")

    utility = _read_matrix(doc["utility"], "$.utility", len(individuals), len(resources))
    merits = _merits_from_dict(doc["merits"], individuals, resources)
    return Instance(individuals, resources, tuple(preferences), merits, utility)


def _read_matrix(raw: Any, path: str, rows: int, cols: int) -> Matrix:
    if not isinstance(raw, list) or len(raw) != rows:
        raise InstanceError(path, f"expected {rows} rows")
    out = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != cols:
            raise InstanceError(f"{path}[{i}]", f"expected {cols} entries")
        out.append(tuple(to_fraction(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)))
    return tuple(out)


def _merits_from_dict(raw: Any, individuals, resources) -> MeritDistribution:
    path = "$.merits"
    if not isinstance(raw, dict) or "type" not in raw:
        raise InstanceError(path, "must be an object with a 'type'")
    kind = raw["type"]
    if kind == "discrete_mixture":
        scenarios = raw.get("scenarios")
        if not isinstance(scenarios, list) or not scenarios:
            raise InstanceError(f"{path}.scenarios", "must be a non-empty list")
        out = []
        for i, sc in enumerate(scenarios):
            p = f"{path}.scenarios[{i}]"
            if not isinstance(sc, dict) or "prob" not in sc or "matrix" not in sc:
                raise InstanceError(p, "needs 'prob' and 'matrix'")
            prob = to_fraction(sc["prob"], f"{p}.prob")
            out.append(
                Scenario(prob, _read_matrix(sc["matrix"], f"{p}.matrix", len(individuals), len(resources)))
            )
        total = sum((s.prob for s in out), Fraction(0))
        if total != 1:
            raise InstanceError(f"{path}.scenarios", f"probabilities sum to {total}, not 1")
        return DiscreteMixture(tuple(out))
    if kind == "independent":
        entries = raw.get("entries")
        if not isinstance(entries, list):
            raise InstanceError(f"{path}.entries", "must be a list")
        xi = {x: i for i, x in enumerate(individuals)}
        yi = {y: i for i, y in enumerate(resources)}
        table: list[list[Dist | None]] = [[None] * len(resources) for _ in individuals]
        for j, e in enumerate(entries):
            p = f"{path}.entries[{j}]"
            if not isinstance(e, dict):
                raise InstanceError(p, "must be an object")
            x = _ident(e.get("x"), f"{p}.x")
            y = _ident(e.get("y"), f"{p}.y")
            if x not in xi or y not in yi:
                raise InstanceError(p, f"unknown pair ({x!r}, {y!r})")
            if table[xi[x]][yi[y]] is not None:
                raise InstanceError(p, f"duplicate entry for ({x!r}, {y!r})")
            table[xi[x]][yi[y]] = _dist_from_dict(e, p)
        for x, row in enumerate(table):
            for y, d in enumerate(row):
                if d is None:
                    raise InstanceError(
                        f"{path}.entries", f"no entry for ({individuals[x]!r}, {resources[y]!r})"
                    )
        return IndependentParametric(tuple(tuple(row) for row in table))  # type: ignore[arg-type]
    raise InstanceError(f"{path}.type", f"unknown merit type {kind!r}")


def _dist_from_dict(e: dict, path: str) -> Dist:
    kind = e.get("dist")
    try:
        if kind == "normal":
            d: Dist = Normal(to_fraction(e["mean"], f"{path}.mean"), to_fraction(e["std"], f"{path}.std"))
            if d.std <= 0:
                raise InstanceError(f"{path}.std", "std must be > 0")
            return d
        if kind == "uniform":
            d = Uniform(to_fraction(e["lo"], f"{path}.lo"), to_fraction(e["hi"], f"{path}.hi"))
            if d.hi <= d.lo:
                raise InstanceError(path, "need hi > lo")
            return d
        if kind == "point":
            return Point(to_fraction(e["value"], f"{path}.value"))
        if kind == "virtual":
            return Floor()
    except KeyError as exc:
        raise InstanceError(path, f"missing field {exc.args[0]!r}") from None
    raise InstanceError(f"{path}.dist", f"unknown distribution {kind!r}")


def _dist_to_dict(d: Dist) -> dict:
    if isinstance(d, Normal):
        return {"dist": "normal", "mean": fraction_str(d.mean), "std": fraction_str(d.std)}
    if isinstance(d, Uniform):
        return {"dist": "uniform", "lo": fraction_str(d.lo), "hi": fraction_str(d.hi)}
    if isinstance(d, Point):
        return {"dist": "point", "value": fraction_str(d.value)}
    return {"dist": "virtual"}


def _matrix_to_json(mat: Matrix) -> list[list[str]]:
    return [[fraction_str(v) for v in row] for row in mat]


def instance_to_dict(inst: Instance) -> dict:
    gamma = inst.merits
    if isinstance(gamma, DiscreteMixture):
        merits: dict = {
            "type": "discrete_mixture",
            "scenarios": [
                {"prob": fraction_str(sc.prob), "matrix": _matrix_to_json(sc.matrix)}
                for sc in gamma.scenarios
            ],
        }
    else:
        merits = {
            "type": "independent",
            "entries": [
                {"x": inst.individuals[x], "y": inst.resources[y], **_dist_to_dict(d)}
                for x, row in enumerate(gamma.entries)
                for y, d in enumerate(row)
            ],
        }
    return {
        "individuals": list(inst.individuals),
        "resources": list(inst.resources),
        "preferences": {
            inst.individuals[x]: [inst.resources[y] for y in pref]
            for x, pref in enumerate(inst.preferences)
        },
        "merits": merits,
        "utility": _matrix_to_json(inst.utility),
    }


def parse_instance(source: IO[str] | IO[bytes] | str | bytes) -> Instance:
    """Read and validate an instance from a JSON stream or string."""
    text = source if isinstance(source, (str, bytes)) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("$", f"malformed JSON: {exc}") from None
    inst = instance_from_dict(doc)
    warn_on_ties(inst)
    return inst


def write_instance(inst: Instance, sink: IO[str]) -> None:
    json.dump(instance_to_dict(inst), sink, indent=1)
    sink.write("\n")


# --- lottery and solution JSON ---------------------------------------------


@dataclass(frozen=True)
class MatchingLottery:
    """Convex combination of matchings; ``components`` holds (weight, matching)."""

    components: tuple[tuple[Fraction, Matching], ...]

    def marginals(self) -> Matrix:
        n = len(self.components[0][1])
        acc = [[Fraction(0)] * n for _ in range(n)]
        for w, m in self.components:
            for x, y in enumerate(m):
                acc[x][y] += w
        return tuple(tuple(row) for row in acc)

    def total_weight(self) -> Fraction:
        return sum((w for w, _ in self.components), Fraction(0))


@dataclass(frozen=True)
class Solution:
    individuals: tuple[str, ...]
    resources: tuple[str, ...]
    marginals: Matrix
    lottery: MatchingLottery
    utility: Fraction
    audit: dict = field(default_factory=dict, compare=False)


def check_lottery(marginals: Matrix, lottery: MatchingLottery) -> None:
    n = len(marginals)
    if not lottery.components:
        raise InstanceError("$.lottery", "empty lottery")
    for i, (w, m) in enumerate(lottery.components):
        if not 0 < w <= 1:
            raise InstanceError(f"$.lottery[{i}].weight", "weight outside (0,1]")
        if sorted(m) != list(range(n)):
            raise InstanceError(f"$.lottery[{i}].matching", "not a bijection")
    if lottery.total_weight() != 1:
        raise InstanceError("$.lottery", "weights do not sum to 1")
    if lottery.marginals() != marginals:
        raise InstanceError("$.lottery", "lottery does not reconstruct the marginals")


def solution_to_dict(sol: Solution) -> dict:
    ind, res = sol.individuals, sol.resources
    return {
        "individuals": list(ind),
        "resources": list(res),
        "marginals": _matrix_to_json(sol.marginals),
        "lottery": [
            {"weight": fraction_str(w), "matching": {ind[x]: res[y] for x, y in enumerate(m)}}
            for w, m in sol.lottery.components
        ],
        "utility": fraction_str(sol.utility),
        "audit": sol.audit,
    }


def write_solution(
    marginals: Matrix,
    lottery: MatchingLottery,
    report: dict,
    sink: IO[str],
    *,
    individuals: Sequence[str],
    resources: Sequence[str],
    utility: Fraction,
) -> None:
    """Serialize a solution after checking that the lottery reconstructs the marginals."""
    check_lottery(marginals, lottery)
    sol = Solution(tuple(individuals), tuple(resources), marginals, lottery, utility, report)
    json.dump(solution_to_dict(sol), sink, indent=1)
    sink.write("\n")


def parse_solution(source: IO[str] | str | bytes) -> Solution:
    text = source if isinstance(source, (str, bytes)) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("$", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError("$", "solution must be a JSON object")
    for key in ("marginals", "lottery", "utility"):
        if key not in doc:
            raise InstanceError(f"$.{key}", "missing")
    raw_lottery = doc["lottery"]
    if not isinstance(raw_lottery, list) or not raw_lottery:
        raise InstanceError("$.lottery", "must be a non-empty list")
    n = len(doc["marginals"])
    marginals = _read_matrix(doc["marginals"], "$.marginals", n, n)
    first = raw_lottery[0].get("matching") if isinstance(raw_lottery[0], dict) else None
    if not isinstance(first, dict):
        raise InstanceError("$.lottery[0].matching", "must be an object")
    # identifiers default to lottery key order when the file omits them
    individuals = tuple(str(v) for v in doc.get("individuals", list(first)))
    resources = tuple(str(v) for v in doc.get("resources", sorted(set(first.values()))))
    if len(individuals) != n or len(resources) != n:
        raise InstanceError("$", "identifier lists do not match the marginals shape")
    yi = {y: i for i, y in enumerate(resources)}
    comps = []
    for i, comp in enumerate(raw_lottery):
        p = f"$.lottery[{i}]"
        if not isinstance(comp, dict) or "weight" not in comp or not isinstance(comp.get("matching"), dict):
            raise InstanceError(p, "needs 'weight' and 'matching'")
        w = to_fraction(comp["weight"], f"{p}.weight")
        mapping = comp["matching"]
        try:
            m = tuple(yi[str(mapping[x])] for x in individuals)
        except KeyError as exc:
            raise InstanceError(f"{p}.matching", f"unknown or missing key {exc.args[0]!r}") from None
        comps.append((w, m))
    lottery = MatchingLottery(tuple(comps))
    check_lottery(marginals, lottery)
    utility = to_fraction(doc["utility"], "$.utility")
    audit = doc.get("audit", {})
    return Solution(individuals, resources, marginals, lottery, utility, audit)
