"""Passive-curious coalition: gradient inversion from the public trace and polynomial recovery.

The coalition sees every agent's state at every round, the mixing weights,
the step sizes, the topology, its own objectives and the shares on links
touching it. From that it rebuilds each fused estimate v, inverts the
projected gradient step on rounds where the projection was inactive, and fits
a polynomial gradient that it integrates into an objective estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .graph import Edge, Topology
from .optimizer import ExecutionTrace, Scenario
from .polynomial import DegenerateFit, Polynomial, least_squares_fit, total

BOUNDARY_TOL = 1e-9
MATCH_TOL = 1e-2


class NoInteriorSamples(ValueError):
    """Every round of the target agent was clipped by the projection."""


@dataclass
class AdversaryView:
    trace: ExecutionTrace
    coalition: tuple[int, ...]
    own_objectives: dict[int, Polynomial]
    known_shares: dict[Edge, Polynomial]

    def __post_init__(self):
        bad = set(self.coalition)
        leaked = [e for e in self.known_shares if e[0] not in bad and e[1] not in bad]
        if leaked:
            raise ValueError(f"adversary view contains good-good shares {sorted(leaked)}")

    @property
    def topology(self) -> Topology:
        return self.trace.topology

    @property
    def good_agents(self) -> list[int]:
        return [v for v in self.topology.nodes if v not in self.coalition]

    @classmethod
    def observe(
        cls,
        trace: ExecutionTrace,
        objectives: Sequence[Polynomial],
        shares: Mapping[Edge, Polynomial],
        coalition: Sequence[int],
    ) -> AdversaryView:
        """Restrict full knowledge to what the coalition legitimately holds."""
        bad = tuple(sorted(set(coalition)))
        own = {a: objectives[a] for a in bad}
        known = {e: p for e, p in shares.items() if e[0] in bad or e[1] in bad}
        return cls(trace, bad, own, known)

    @classmethod
    def from_scenario(cls, scenario: Scenario, trace: ExecutionTrace, coalition: Sequence[int] | None = None) -> AdversaryView:
        sc = scenario.resolve()
        return cls.observe(trace, sc.objectives, sc.shares, sc.coalition if coalition is None else coalition)

    def own_obfuscated(self, a: int) -> Polynomial:
        """The coalition member's f_hat, computable from its objective and its incident shares."""
        received = total(p for (i, j), p in self.known_shares.items() if j == a)
        sent = total(p for (i, j), p in self.known_shares.items() if i == a)
        return self.own_objectives[a] + received - sent


def estimate_gradient_samples(view: AdversaryView, target: int) -> list[tuple[float, float]]:
    """(v, gradient) pairs for ``target`` from every round where projection was inactive."""
    if target in view.coalition:
        raise ValueError(f"agent {target} belongs to the coalition")
    tr = view.trace
    X = tr.feasible
    out = []
    for k in range(tr.rounds):
        v = float(tr.mixing[k][target] @ tr.x[k])
        x_next = float(tr.x[k + 1, target])
        if X.on_boundary(x_next, BOUNDARY_TOL):
            continue
        out.append((v, (v - x_next) / float(tr.alpha[k])))
    if not out:
        raise NoInteriorSamples(f"every round of agent {target} was clipped")
    return out


@dataclass
class RecoveredFunction:
    agent: int
    gradient: Polynomial
    objective: Polynomial
    samples: int
    residual: float

    def to_json(self) -> dict:
        return {
            "agent": self.agent,
            "gradient_coeffs": self.gradient.to_json(),
            "objective_coeffs": self.objective.to_json(),
            "samples": self.samples,
            "residual": self.residual,
        }


def recover_objective(samples: Sequence[tuple[float, float]], degree: int, agent: int = -1) -> RecoveredFunction:
    grad = least_squares_fit(samples, degree)
    res = np.array([grad(v) - g for v, g in samples])
    rms = float(np.sqrt(np.mean(res**2))) if len(res) else 0.0
    return RecoveredFunction(agent, grad, grad.antiderivative(), len(samples), rms)


@dataclass
class AttackResult:
    recovered: dict[int, RecoveredFunction] = field(default_factory=dict)
    errors: dict[int, str] = field(default_factory=dict)


def attack(view: AdversaryView, gradient_degree: int) -> AttackResult:
    """Recover every good agent's (obfuscated) objective; per-agent failures are recorded, not raised."""
    result = AttackResult()
    for j in view.good_agents:
        try:
            samples = estimate_gradient_samples(view, j)
            result.recovered[j] = recover_objective(samples, gradient_degree, agent=j)
        except (NoInteriorSamples, DegenerateFit) as exc:
            result.errors[j] = str(exc)
    return result


def recover_aggregate(view: AdversaryView, recovered: Mapping[int, RecoveredFunction]) -> tuple[Polynomial, Polynomial]:
    """Estimates of the network aggregate and of the good agents' aggregate, constant terms dropped."""
    missing = [j for j in view.good_agents if j not in recovered]
    if missing:
        raise ValueError(f"no recovered function for good agents {missing}")
    f_total = total(recovered[j].objective for j in view.good_agents)
    f_total = f_total + total(view.own_obfuscated(a) for a in view.coalition)
    f_good = f_total - total(view.own_objectives[a] for a in view.coalition)
    return f_total.drop_constant(), f_good.drop_constant()


def verdict(rec: RecoveredFunction, original: Polynomial, obfuscated: Polynomial, tol: float = MATCH_TOL) -> dict:
    """Judge a recovery against ground truth the adversary itself never sees."""
    d_orig = rec.objective.distance(original, ignore_constant=True)
    d_obf = rec.objective.distance(obfuscated, ignore_constant=True)
    if d_orig <= tol:
        label = "recovered_original"
    elif d_obf <= tol:
        label = "recovered_obfuscated_only"
    else:
        label = "failed"
    return {"verdict": label, "distance_to_original": d_orig, "distance_to_obfuscated": d_obf}


def attack_report(
    result: AttackResult,
    objectives: Sequence[Polynomial],
    obfuscated: Sequence[Polynomial],
    tol: float = MATCH_TOL,
) -> dict:
    agents = {}
    for j, rec in sorted(result.recovered.items()):
        entry = rec.to_json()
        entry.update(verdict(rec, objectives[j], obfuscated[j], tol))
        agents[str(j)] = entry
    for j, msg in sorted(result.errors.items()):
        agents[str(j)] = {"agent": j, "verdict": "failed", "error": msg}
    return {"tolerance": tol, "agents": agents}
