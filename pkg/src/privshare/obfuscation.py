"""Function sharing: random share polynomials and the obfuscated objectives they induce.

Every directed link (I, J) carries a polynomial R[I, J] sent from I to J. Agent
I replaces its objective by

    f_hat_I = f_I + sum_K R[K, I] - sum_J R[I, J]

so each share is added once and subtracted once and the network-wide sum is
unchanged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Edge, Topology, incidence_matrix
from .polynomial import Polynomial, random_polynomial, total

ObjectiveVector = list[Polynomial]


class ShareAssignment(dict):
    """Map from directed edge (sender, receiver) to its share polynomial."""

    @classmethod
    def zeros(cls, g: Topology) -> ShareAssignment:
        return cls({e: Polynomial.zero() for e in g.directed_edges()})

    def check_domain(self, g: Topology) -> None:
        want = set(g.directed_edges())
        have = set(self)
        if want != have:
            missing = sorted(want - have)
            extra = sorted(have - want)
            raise ValueError(f"share domain mismatch: missing {missing}, unexpected {extra}")

    def to_json(self) -> dict:
        return {
            "shares": [{"from": i, "to": j, "coeffs": p.to_json()} for (i, j), p in sorted(self.items())]
        }

    @classmethod
    def from_json(cls, data: Mapping) -> ShareAssignment:
        out = cls()
        for item in data["shares"]:
            key = (int(item["from"]), int(item["to"]))
            if key in out:
                raise ValueError(f"duplicate share for edge {key}")
            out[key] = Polynomial.from_json(item["coeffs"])
        return out

    def max_degree(self) -> int:
        return max((p.degree for p in self.values()), default=0)


def generate_shares(g: Topology, degree: int, coeff_bound: float, rng: np.random.Generator) -> ShareAssignment:
    """One independent zero-constant random polynomial per directed link, drawn in column order."""
    if degree < 1:
        raise ValueError("share degree must be at least 1")
    return ShareAssignment(
        {e: random_polynomial(degree, coeff_bound, zero_constant=True, rng=rng) for e in g.directed_edges()}
    )


def obfuscate(f: Sequence[Polynomial], shares: Mapping[Edge, Polynomial], g: Topology) -> ObjectiveVector:
    if len(f) != g.node_count:
        raise ValueError(f"expected {g.node_count} objectives, got {len(f)}")
    out = list(f)
    for (i, j) in g.directed_edges():
        r = shares[(i, j)]
        out[j] = out[j] + r
        out[i] = out[i] - r
    return out


def obfuscate_matrix(f: Sequence[Polynomial], shares: Mapping[Edge, Polynomial], g: Topology) -> ObjectiveVector:
    """Same transformation written as f + B R, one monomial degree at a time."""
    inc = incidence_matrix(g)
    R = list(shares[e] for e in inc.columns)
    width = 1 + max([p.degree for p in R] + [p.degree for p in f] + [0])
    Rm = np.array([p.padded(width) for p in R]).reshape(len(R), width)
    Fm = np.array([p.padded(width) for p in f])
    out = Fm + inc.matrix @ Rm
    return [Polynomial(row) for row in out]


def aggregate(f: Iterable[Polynomial]) -> Polynomial:
    return total(f)


def check_invariant(f: Sequence[Polynomial], f_hat: Sequence[Polynomial]) -> bool:
    if len(f) != len(f_hat):
        raise ValueError("objective vectors differ in length")
    return aggregate(f) == aggregate(f_hat)


@dataclass
class AssumptionReport:
    gradient_bounds: list[float]
    lipschitz_constants: list[float]
    aggregate_convex: bool

    def to_json(self) -> dict:
        return {
            "gradient_bounds": self.gradient_bounds,
            "lipschitz_constants": self.lipschitz_constants,
            "aggregate_convex": self.aggregate_convex,
        }


def _max_abs_on(p: Polynomial, lo: float, hi: float, xs: np.ndarray) -> float:
    cand = [lo, hi, *xs]
    dp = p.derivative()
    if dp.degree >= 1:
        roots = np.roots(list(reversed(dp.coeffs)))
        cand += [r.real for r in roots if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
    return max(abs(p(x)) for x in cand)


def validate_assumptions(f_hat: Sequence[Polynomial], lower: float, upper: float, samples: int = 10_000) -> AssumptionReport:
    """Gradient bounds, gradient Lipschitz constants and aggregate convexity on [lower, upper].

    Advisory only: a non-convex aggregate triggers a warning, not an error.
    """
    if not lower < upper:
        raise ValueError("feasible interval must satisfy lower < upper")
    xs = np.linspace(lower, upper, samples)
    grads = [p.derivative() for p in f_hat]
    L = [_max_abs_on(d, lower, upper, xs) for d in grads]
    N = [_max_abs_on(d.derivative(), lower, upper, xs) for d in grads]
    curv = aggregate(f_hat).derivative().derivative()
    convex = bool(np.all(np.polynomial.polynomial.polyval(xs, curv.padded(curv.degree + 1)) >= 0))
    if not convex:
        warnings.warn("aggregate objective is not convex on the feasible set", stacklevel=2)
    return AssumptionReport(L, N, convex)
