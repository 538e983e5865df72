import itertools
import json
from importlib.resources import files

import numpy as np
import pytest

from privshare.graph import Topology
from privshare.optimizer import Scenario


def shipped(name: str) -> Scenario:
    return Scenario.from_json(json.loads(files("privshare.scenarios").joinpath(f"{name}.json").read_text()))


def random_connected_graph(rng: np.random.Generator, n: int, p: float | None = None) -> Topology:
    p = rng.uniform(0.3, 0.9) if p is None else p
    while True:
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
        g = Topology(n, edges)
        if g.is_connected():
            return g


@pytest.fixture
def sec6():
    return shipped("sec6").resolve()


@pytest.fixture
def example1():
    return shipped("example1").resolve()


@pytest.fixture
def report_criterion(request):
    results = request.config.stash.setdefault(_RESULTS, [])

    def record(cid: str, description: str, passed: bool, detail: str = "") -> None:
        results.append((cid, description, passed, detail))

    return record


_RESULTS = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid, desc, passed, detail in sorted(results, key=lambda r: int(r[0])):
        line = f"[{'PASS' if passed else 'FAIL'}] C{cid} {desc}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)
