import sys
from pathlib import Path

import pytest
from hypothesis import settings

import fairmatch.flowlp as flowlp

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_original_solve = flowlp.solve_min_cost_flow
SOLVER_STATS = {"calls": 0, "certified": 0}
CRITERIA: list[tuple[str, bool, str]] = []


def _certified_solve(net):
    sol = _original_solve(net)
    SOLVER_STATS["calls"] += 1
    assert flowlp.verify_optimality(net, sol), "solver output failed its optimality certificate"
    SOLVER_STATS["certified"] += 1
    return sol


# every min-cost-flow solve anywhere in the suite must carry a valid certificate
flowlp.solve_min_cost_flow = _certified_solve


class _Criterion:
    def __init__(self, name: str):
        self.name = name
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = self.detail if ok else f"{exc_type.__name__}: {exc}"
        CRITERIA.append((self.name, ok, detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {self.name} {detail}")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    terminalreporter.write_line(
        f"min-cost-flow solves certified: {SOLVER_STATS['certified']}/{SOLVER_STATS['calls']}"
    )
