"""Round-synchronous distributed projected gradient descent on obfuscated objectives.

Each round k (1-based) every agent J fuses its neighbours' states,
v_J = sum_I B[J, I] x_I, then takes a projected gradient step
x_J <- clip(v_J - alpha_k * f_hat_J'(v_J), lower, upper) with
alpha_k = a / (k + b). All agents read the same snapshot of round-k states.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .graph import InvalidMixingMatrix, MixingMatrix, Topology, check_mixing, metropolis_mixing
from .obfuscation import ShareAssignment, aggregate, generate_shares, obfuscate
from .polynomial import Polynomial

DEFAULT_FEASIBLE = (-2.0, 2.0)
DEFAULT_ITERATIONS = 500
DEFAULT_SHARE_BOUND = 10.0


class InvalidScenario(ValueError):
    """Carries every validation problem found in a scenario, not just the first."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario: " + "; ".join(self.problems))


@dataclass(frozen=True)
class FeasibleSet:
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper) and self.lower < self.upper):
            raise ValueError(f"feasible set [{self.lower}, {self.upper}] must be a bounded non-empty interval")

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    def on_boundary(self, x: float, tol: float = 1e-9) -> bool:
        return abs(x - self.lower) <= tol or abs(x - self.upper) <= tol


@dataclass(frozen=True)
class StepSchedule:
    """alpha_k = a / (k + b) for k = 1, 2, ..."""

    a: float = 1.0
    b: float = 0.0001

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("step numerator must be positive")
        if not self.b >= 0:
            raise ValueError("step offset must be non-negative")

    def alpha(self, k: int) -> float:
        return self.a / (k + self.b)


def fuse(states: Sequence[float], B: np.ndarray, j: int) -> float:
    return float(np.asarray(B)[j] @ np.asarray(states, dtype=float))


def project(x: float, X: FeasibleSet) -> float:
    return min(max(x, X.lower), X.upper)


def step(v: float, objective: Polynomial, alpha: float, X: FeasibleSet) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return project(v - alpha * objective.derivative()(v), X)


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    objectives: tuple[Polynomial, ...]
    mixing: MixingMatrix
    feasible: FeasibleSet = FeasibleSet(*DEFAULT_FEASIBLE)
    step: StepSchedule = StepSchedule()
    iterations: int = DEFAULT_ITERATIONS
    share_mode: str = "generate"  # "generate" | "zero" | "explicit"
    shares: ShareAssignment | None = None
    share_degree: int | None = None
    share_bound: float = DEFAULT_SHARE_BOUND
    initial: tuple[float, ...] | None = None
    coalition: tuple[int, ...] = ()
    seed: int = 0
    attack_degree: int | None = None
    name: str = "scenario"

    @property
    def size(self) -> int:
        return self.topology.node_count

    @property
    def good_agents(self) -> list[int]:
        return [v for v in self.topology.nodes if v not in self.coalition]

    def max_objective_degree(self) -> int:
        return max(p.degree for p in self.objectives)

    def _rngs(self) -> tuple[np.random.Generator, np.random.Generator]:
        share_seq, init_seq = np.random.SeedSequence(self.seed).spawn(2)
        return np.random.default_rng(share_seq), np.random.default_rng(init_seq)

    def resolve(self) -> Scenario:
        """Fill in generated shares and random initial iterates from the seed."""
        share_rng, init_rng = self._rngs()
        shares = self.shares
        if self.share_mode == "zero":
            shares = ShareAssignment.zeros(self.topology)
        elif self.share_mode == "generate":
            degree = self.share_degree or max(self.max_objective_degree(), 1)
            shares = generate_shares(self.topology, degree, self.share_bound, share_rng)
        initial = self.initial
        if initial is None:
            initial = tuple(init_rng.uniform(self.feasible.lower, self.feasible.upper, size=self.size).tolist())
        return dataclasses.replace(self, share_mode="explicit", shares=shares, initial=initial)

    def with_zero_shares(self) -> Scenario:
        return dataclasses.replace(self, share_mode="zero", shares=None)

    def obfuscated_objectives(self) -> list[Polynomial]:
        r = self if self.share_mode == "explicit" else self.resolve()
        return obfuscate(list(r.objectives), r.shares, r.topology)

    # -- JSON -----------------------------------------------------------------

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> Scenario:
        problems: list[str] = []

        def attempt(label, fn, default=None):
            try:
                return fn()
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"{label}: {exc}")
                return default

        if not isinstance(data, Mapping):
            raise InvalidScenario(["scenario must be a JSON object"])
        topo = attempt("topology", lambda: Topology.from_json(data["topology"]))
        objectives = attempt(
            "objectives", lambda: tuple(Polynomial.from_json(c) for c in data["objectives"]), ()
        )
        if topo is not None and objectives and len(objectives) != topo.node_count:
            problems.append(f"objectives: expected {topo.node_count} functions, got {len(objectives)}")
        if topo is not None and not topo.is_connected():
            problems.append("topology: graph is not connected")

        lo_hi = data.get("feasible_set", list(DEFAULT_FEASIBLE))
        feasible = attempt("feasible_set", lambda: FeasibleSet(float(lo_hi[0]), float(lo_hi[1])))
        st = data.get("step", {})
        schedule = attempt("step", lambda: StepSchedule(float(st.get("a", 1.0)), float(st.get("b", 0.0001))))
        iterations = data.get("iterations", DEFAULT_ITERATIONS)
        if not isinstance(iterations, int) or iterations < 1:
            problems.append(f"iterations: must be a positive integer, got {iterations!r}")

        mixing = None
        mix = data.get("mixing", "metropolis")
        if topo is not None:
            if mix == "metropolis":
                mixing = attempt("mixing", lambda: metropolis_mixing(topo)) if topo.is_connected() else None
            else:
                try:
                    W = np.array(mix, dtype=float)
                    bad = check_mixing(W, topo)
                    if bad:
                        problems.extend(f"mixing: {b}" for b in bad)
                    else:
                        mixing = MixingMatrix.from_array(W, topo)
                except (ValueError, TypeError, InvalidMixingMatrix) as exc:
                    problems.append(f"mixing: {exc}")

        share_mode, shares, share_degree, share_bound = "generate", None, None, DEFAULT_SHARE_BOUND
        raw = data.get("shares", "generate")
        if raw == "zero":
            share_mode = "zero"
        elif raw == "generate":
            pass
        elif isinstance(raw, Mapping) and "generate" in raw:
            gen = raw["generate"] or {}
            share_degree = gen.get("degree")
            share_bound = float(gen.get("coeff_bound", DEFAULT_SHARE_BOUND))
            if share_degree is not None and (not isinstance(share_degree, int) or share_degree < 1):
                problems.append("shares: generated share degree must be an integer >= 1")
            if share_bound <= 0:
                problems.append("shares: coeff_bound must be positive")
        elif isinstance(raw, Mapping) and "shares" in raw:
            share_mode = "explicit"
            shares = attempt("shares", lambda: ShareAssignment.from_json(raw))
            if shares is not None and topo is not None:
                attempt("shares", lambda: shares.check_domain(topo))
        else:
            problems.append(f"shares: unrecognized value {raw!r}")

        initial = data.get("initial")
        if initial is not None:
            initial = attempt("initial", lambda: tuple(float(v) for v in initial))
            if initial is not None and topo is not None and len(initial) != topo.node_count:
                problems.append(f"initial: expected {topo.node_count} values, got {len(initial)}")
            elif initial is not None and feasible is not None and not feasible.contains(initial):
                problems.append("initial: initial iterates must lie inside the feasible set")

        coalition = data.get("coalition", [])
        try:
            coalition = tuple(sorted({int(c) for c in coalition}))
        except (TypeError, ValueError):
            problems.append(f"coalition: expected a list of node ids, got {coalition!r}")
            coalition = ()
        if topo is not None and any(not 0 <= c < topo.node_count for c in coalition):
            problems.append(f"coalition: node ids must lie in [0, {topo.node_count})")

        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            problems.append(f"seed: must be an integer, got {seed!r}")
        attack_degree = data.get("attack_degree")
        if attack_degree is not None and (not isinstance(attack_degree, int) or attack_degree < 0):
            problems.append("attack_degree: must be a non-negative integer")

        if problems:
            raise InvalidScenario(problems)
        return cls(
            topology=topo,
            objectives=objectives,
            mixing=mixing,
            feasible=feasible,
            step=schedule,
            iterations=iterations,
            share_mode=share_mode,
            shares=shares,
            share_degree=share_degree,
            share_bound=share_bound,
            initial=initial,
            coalition=coalition,
            seed=seed,
            attack_degree=attack_degree,
            name=str(data.get("name", "scenario")),
        )

    def to_json(self) -> dict:
        d: dict[str, Any] = {
            "name": self.name,
            "topology": self.topology.to_json(),
            "objectives": [p.to_json() for p in self.objectives],
            "feasible_set": [self.feasible.lower, self.feasible.upper],
            "mixing": self.mixing.to_json(),
            "step": {"a": self.step.a, "b": self.step.b},
            "iterations": self.iterations,
            "coalition": list(self.coalition),
            "seed": self.seed,
            "attack_degree": self.attack_degree,
            "initial": list(self.initial) if self.initial is not None else None,
        }
        if self.share_mode == "zero":
            d["shares"] = "zero"
        elif self.share_mode == "explicit":
            d["shares"] = self.shares.to_json()
        else:
            d["shares"] = {"generate": {"degree": self.share_degree, "coeff_bound": self.share_bound}}
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ExecutionTrace:
    """Everything a fully informed observer sees: all fused estimates and iterates.

    ``x[0]`` holds the initial iterates and ``x[k]`` the iterates after round k;
    ``v[k-1]``, ``alpha[k-1]`` and ``mixing[k-1]`` belong to round k.
    """

    v: np.ndarray
    x: np.ndarray
    alpha: np.ndarray
    mixing: np.ndarray
    topology: Topology
    feasible: FeasibleSet
    step: StepSchedule = field(default_factory=StepSchedule)

    @property
    def rounds(self) -> int:
        return len(self.alpha)

    def same_execution(self, other: ExecutionTrace) -> bool:
        return (
            np.array_equal(self.v, other.v)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.mixing, other.mixing)
        )


def _gradient_table(objectives: Sequence[Polynomial]) -> np.ndarray:
    grads = [p.derivative() for p in objectives]
    width = 1 + max(g.degree for g in grads)
    return np.array([g.padded(width) for g in grads])


def run(scenario: Scenario) -> ExecutionTrace:
    """Share exchange, obfuscation, then ``iterations`` rounds of fusion and projected gradient steps."""
    sc = scenario.resolve()
    f_hat = obfuscate(list(sc.objectives), sc.shares, sc.topology)
    D = _gradient_table(f_hat)
    W = np.asarray(sc.mixing.entries)
    lo, hi = sc.feasible.lower, sc.feasible.upper
    N, S = sc.iterations, sc.size

    x = np.empty((N + 1, S))
    v = np.empty((N, S))
    alpha = np.empty(N)
    x[0] = sc.initial
    for k in range(1, N + 1):
        a_k = sc.step.alpha(k)
        vk = W @ x[k - 1]
        # Horner over all agents at once
        g = np.zeros(S)
        for c in D.T[::-1]:
            g = g * vk + c
        v[k - 1] = vk
        alpha[k - 1] = a_k
        x[k] = np.clip(vk - a_k * g, lo, hi)
    mixing = np.broadcast_to(W, (N, S, S))
    return ExecutionTrace(v, x, alpha, mixing, sc.topology, sc.feasible, sc.step)


@dataclass
class Metrics:
    iteration: np.ndarray
    mean: np.ndarray
    max_dev: np.ndarray
    rms_sq: np.ndarray
    f_of_mean: np.ndarray

    def final(self) -> dict:
        return {
            "iteration": int(self.iteration[-1]),
            "mean": float(self.mean[-1]),
            "max_dev": float(self.max_dev[-1]),
            "rms_sq": float(self.rms_sq[-1]),
            "f_of_mean": float(self.f_of_mean[-1]),
        }


def metrics(trace: ExecutionTrace, objectives: Sequence[Polynomial] | None = None) -> Metrics:
    """Iterate average, max deviation from it, summed squared deviation and f at the average."""
    x = trace.x
    if x.size == 0:
        raise ValueError("empty trace")
    mean = x.mean(axis=1)
    dev = x - mean[:, None]
    f = aggregate(objectives) if objectives is not None else None
    f_of_mean = np.array([f(m) for m in mean]) if f is not None else np.full(len(mean), np.nan)
    return Metrics(np.arange(len(x)), mean, np.abs(dev).max(axis=1), (dev**2).sum(axis=1), f_of_mean)
