import numpy as np
import pytest

from conftest import random_connected_graph, shipped
from privshare.graph import Topology
from privshare.obfuscation import (
    ShareAssignment,
    aggregate,
    check_invariant,
    generate_shares,
    obfuscate,
    obfuscate_matrix,
    validate_assumptions,
)
from privshare.polynomial import Polynomial as P
from privshare.polynomial import random_polynomial

K3 = Topology.complete(3)
F_SEC6 = [P([0, 0, 1]), P([0, 0, 1, 0, 1]), P([0, 0, 0, 0, 1])]
F_HAT_TABLE2 = [P([0, -3, -4, -4, 2]), P([0, 10, 4, -7, -4]), P([0, -7, 2, 11, 4])]


def table2_shares(problem: str) -> ShareAssignment:
    return shipped("sec6" if problem == "1" else "table2_problem2").shares


def test_generate_shares():
    rng = np.random.default_rng(0)
    R = generate_shares(K3, 4, 10.0, rng)
    assert len(R) == 6
    R.check_domain(K3)
    assert all(p(0.0) == 0.0 for p in R.values())
    assert R == generate_shares(K3, 4, 10.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        generate_shares(K3, 0, 10.0, rng)


def test_reverse_shares_independent():
    rng = np.random.default_rng(1)
    unequal = 0
    for _ in range(50):
        R = generate_shares(K3, 4, 10.0, rng)
        unequal += sum(R[(i, j)] != R[(j, i)] for i, j in K3.sorted_edges())
    assert unequal == 150


def test_table2_problem1():
    assert obfuscate(F_SEC6, table2_shares("1"), K3) == F_HAT_TABLE2


def test_table2_problem2_same_obfuscation():
    h = [P([0, 0, 1]), P([0, 0, 3, 0, 3]), P([0, 0, -2, 0, -1])]
    assert obfuscate(h, table2_shares("2"), K3) == F_HAT_TABLE2


def test_zero_shares_identity():
    assert obfuscate(F_SEC6, ShareAssignment.zeros(K3), K3) == F_SEC6


def test_aggregate():
    assert aggregate(F_SEC6) == P([0, 0, 2, 0, 2])
    assert aggregate([P([0, 0, 1]), P([0, 0, 3, 0, 3]), P([0, 0, -2, 0, -1])]) == P([0, 0, 2, 0, 2])
    assert aggregate([P([1, 2])]) == P([1, 2])


def test_check_invariant():
    assert check_invariant(F_SEC6, F_HAT_TABLE2)
    bumped = list(F_HAT_TABLE2)
    bumped[1] = bumped[1] + P([0, 1e-6])
    assert not check_invariant(F_SEC6, bumped)
    with pytest.raises(ValueError):
        check_invariant(F_SEC6, F_HAT_TABLE2[:2])


@pytest.mark.parametrize("seed", range(200))
def test_random_instances(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, int(rng.integers(2, 8)))
    f = [random_polynomial(int(rng.integers(0, 5)), 5.0, rng=rng) for _ in g.nodes]
    R = generate_shares(g, int(rng.integers(1, 5)), 10.0, rng)
    f_hat = obfuscate(f, R, g)
    assert f_hat == obfuscate_matrix(f, R, g)
    assert check_invariant(f, f_hat)
    # every agent with an incident link sees a changed objective
    assert all(f_hat[i] != f[i] for i in g.nodes if g.degree(i) > 0)


def test_share_json_roundtrip():
    R = table2_shares("1")
    data = R.to_json()
    assert data["shares"][0] == {"from": 0, "to": 1, "coeffs": [0, 3, 9, 1, 2]}
    assert ShareAssignment.from_json(data) == R


def test_share_domain_check():
    R = ShareAssignment.zeros(K3)
    del R[(0, 1)]
    with pytest.raises(ValueError, match="missing"):
        R.check_domain(K3)


def test_validate_assumptions():
    rep = validate_assumptions([P([0, 0, 1, 0, 1])], -2.0, 2.0)
    assert rep.gradient_bounds[0] == pytest.approx(36.0)
    assert rep.lipschitz_constants[0] == pytest.approx(50.0)
    assert rep.aggregate_convex

    rep = validate_assumptions([P([3])], -1.0, 1.0)
    assert rep.gradient_bounds == [0.0] and rep.lipschitz_constants == [0.0]

    rep = validate_assumptions(F_HAT_TABLE2, -10.0, 10.0)
    assert rep.aggregate_convex


@pytest.mark.filterwarnings("ignore:aggregate objective")
def test_validate_assumptions_interior_extremum():
    # |(x^3 - 3x)'| = |3x^2 - 3| peaks at the endpoints and at the critical point x = 0
    rep = validate_assumptions([P([0, -3, 0, 1])], -0.5, 0.5)
    assert rep.gradient_bounds[0] == pytest.approx(3.0)


def test_validate_assumptions_warns_nonconvex():
    with pytest.warns(UserWarning, match="not convex"):
        rep = validate_assumptions([P([0, 0, -1])], -1.0, 1.0)
    assert not rep.aggregate_convex
