import dataclasses

import numpy as np
import pytest

from conftest import shipped
from privshare.adversary import (
    AdversaryView,
    NoInteriorSamples,
    attack,
    attack_report,
    estimate_gradient_samples,
    recover_aggregate,
    recover_objective,
)
from privshare.graph import Topology, metropolis_mixing
from privshare.obfuscation import obfuscate
from privshare.optimizer import FeasibleSet, Scenario, run
from privshare.polynomial import DegenerateFit
from privshare.polynomial import Polynomial as P


def test_inversion_is_exact_on_interior_rounds(example1):
    tr = run(example1)
    view = AdversaryView.from_scenario(example1, tr)
    for j in (1, 2):
        grad = example1.objectives[j].derivative()
        for v, g in estimate_gradient_samples(view, j):
            assert g == pytest.approx(grad(v), rel=1e-9, abs=1e-9)


def test_boundary_rounds_are_discarded():
    g = Topology(1)
    sc = Scenario(
        topology=g,
        objectives=(P([0, -10]),),  # gradient -10 pushes the iterate to the upper bound
        mixing=metropolis_mixing(g),
        feasible=FeasibleSet(-1.0, 1.0),
        share_mode="zero",
        initial=(0.0,),
        iterations=20,
        coalition=(),
    )
    tr = run(sc)
    view = AdversaryView(tr, (), {}, {})
    with pytest.raises(NoInteriorSamples):
        estimate_gradient_samples(view, 0)
    result = attack(view, 0)
    assert 0 in result.errors and not result.recovered


def test_coalition_member_is_not_a_target(example1):
    view = AdversaryView.from_scenario(example1, run(example1))
    with pytest.raises(ValueError):
        estimate_gradient_samples(view, 0)
    assert view.good_agents == [1, 2]


def test_recover_objective_example1_gradients():
    xs = np.linspace(-3, 3, 40)
    for f in (P([20, -36, 25, -8, 1]), P([81, -108, 54, -12, 1])):
        d = f.derivative()
        rec = recover_objective([(x, d(x)) for x in xs], 3)
        assert rec.objective.distance(f, ignore_constant=True) < 1e-9
        assert rec.objective.coeff(0) == 0.0
        assert rec.residual < 1e-9


def test_recover_zero_gradient():
    rec = recover_objective([(x, 0.0) for x in np.linspace(-1, 1, 10)], 2)
    assert rec.gradient.distance(P.zero()) < 1e-12


def test_recover_underdetermined_raises():
    with pytest.raises(DegenerateFit):
        recover_objective([(1.0, 2.0), (1.0, 2.0), (1.0, 2.0)], 2)


def test_example1_attack_recovers_originals(example1):
    tr = run(example1)
    res = attack(AdversaryView.from_scenario(example1, tr), 3)
    rep = attack_report(res, example1.objectives, obfuscate(list(example1.objectives), example1.shares, example1.topology))
    assert {k: v["verdict"] for k, v in rep["agents"].items()} == {"1": "recovered_original", "2": "recovered_original"}


def test_sec6_attack_sees_only_obfuscated(sec6):
    tr = run(sec6)
    view = AdversaryView.from_scenario(sec6, tr)
    res = attack(view, 3)
    f_hat = obfuscate(list(sec6.objectives), sec6.shares, sec6.topology)
    rep = attack_report(res, sec6.objectives, f_hat)
    for j in ("1", "2"):
        assert rep["agents"][j]["verdict"] == "recovered_obfuscated_only"
        assert rep["agents"][j]["distance_to_obfuscated"] <= 1e-2
        assert rep["agents"][j]["distance_to_original"] > 0.5
    f_total, f_good = recover_aggregate(view, res.recovered)
    assert f_total.distance(P([0, 0, 2, 0, 2])) < 1e-6
    assert f_good.distance(P([0, 0, 1, 0, 2])) < 1e-6


def test_own_obfuscated_matches_full_knowledge(sec6):
    view = AdversaryView.from_scenario(sec6, run(sec6))
    f_hat = obfuscate(list(sec6.objectives), sec6.shares, sec6.topology)
    assert view.own_obfuscated(0) == f_hat[0]


def test_whole_network_coalition(sec6):
    sc = dataclasses.replace(sec6, coalition=(0, 1, 2))
    view = AdversaryView.from_scenario(sc, run(sc))
    res = attack(view, 3)
    assert res.recovered == {} and res.errors == {}
    f_total, f_good = recover_aggregate(view, res.recovered)
    assert f_good.is_zero()
    assert f_total == P([0, 0, 2, 0, 2])


def test_view_rejects_good_good_shares(sec6):
    tr = run(sec6)
    with pytest.raises(ValueError, match="good-good"):
        AdversaryView(tr, (0,), {0: sec6.objectives[0]}, dict(sec6.shares))


def test_view_holds_only_incident_shares(sec6):
    view = AdversaryView.from_scenario(sec6, run(sec6))
    assert set(view.known_shares) == {(0, 1), (0, 2), (1, 0), (2, 0)}
    assert set(view.own_objectives) == {0}


def test_generated_shares_hide_objectives():
    sc = shipped("fig3a_standin").resolve()
    tr = run(sc)
    degree = max(sc.max_objective_degree(), sc.shares.max_degree()) - 1
    res = attack(AdversaryView.from_scenario(sc, tr), degree)
    f_hat = obfuscate(list(sc.objectives), sc.shares, sc.topology)
    rep = attack_report(res, sc.objectives, f_hat)
    assert all(a["verdict"] != "recovered_original" for a in rep["agents"].values())
