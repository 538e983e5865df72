"""Constructive indistinguishability check.

Given the real objectives f with shares R, and any alternative f_alt that
agrees with the coalition's own objectives and has the same sum, build shares
G with f + B R = f_alt + B G while G equals R on every link touching the
coalition. The coalition then observes exactly the same execution.

Construction:
  1. pin G to R on coalition-incident links;
  2. pick a BFS spanning tree over the good agents and give every other
     good-good link a random share;
  3. solve the tree links from B_tree G_tree = rhs, one monomial degree at a
     time, with the tree's left pseudoinverse (B_tree^T B_tree)^-1 B_tree^T.

The tree solve runs in exact rational arithmetic. With grid-valued inputs the
resulting shares are exactly representable, so the two executions agree bit
for bit rather than to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graph import Edge, NotConnected, Topology, delete_adversary_edges, incidence_matrix, spanning_tree
from .obfuscation import ShareAssignment, aggregate, obfuscate
from .optimizer import Scenario, run
from .polynomial import Polynomial, random_polynomial, total

RESIDUAL_TOL = 1e-8


class NotAdmissible(ValueError):
    """Removing the coalition's links disconnects the good agents."""


class InconsistentAlternative(ValueError):
    """The alternative objectives cannot produce the observed execution."""


def sample_alternative_objectives(
    f: Sequence[Polynomial],
    coalition: Sequence[int],
    rng: np.random.Generator,
    degree: int,
    coeff_bound: float = 10.0,
) -> list[Polynomial]:
    """Add a random zero-sum perturbation across the good agents; coalition entries stay put."""
    bad = set(coalition)
    good = [i for i in range(len(f)) if i not in bad]
    if not good:
        raise ValueError("no good agents")
    out = list(f)
    if len(good) == 1:
        return out
    while True:
        q = [random_polynomial(degree, coeff_bound, rng=rng) for _ in good[:-1]]
        if any(not p.is_zero() for p in q):
            break
    for i, p in zip(good, q):
        out[i] = out[i] + p
    out[good[-1]] = out[good[-1]] - total(q)
    return out


def _solve_exact(A: np.ndarray, rhs: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve the normal equations A^T A X = A^T rhs exactly (A integer, full column rank)."""
    n_rows, m = A.shape
    if m == 0:
        return []
    Ai = [[int(a) for a in row] for row in A]
    M = [[Fraction(sum(Ai[r][i] * Ai[r][j] for r in range(n_rows))) for j in range(m)] for i in range(m)]
    width = len(rhs[0]) if rhs else 0
    Y = [[sum((Ai[r][i] * rhs[r][d] for r in range(n_rows)), Fraction(0)) for d in range(width)] for i in range(m)]
    for col in range(m):
        piv = next(r for r in range(col, m) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        Y[col], Y[piv] = Y[piv], Y[col]
        p = M[col][col]
        M[col] = [a / p for a in M[col]]
        Y[col] = [a / p for a in Y[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                c = M[r][col]
                M[r] = [a - c * b for a, b in zip(M[r], M[col])]
                Y[r] = [a - c * b for a, b in zip(Y[r], Y[col])]
    return Y


@dataclass
class ConstructionResult:
    shares: ShareAssignment
    residual: float
    min_singular_value: float
    tree: list[Edge]
    verified: bool = False
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "min_singular_value": self.min_singular_value,
            "tree": [list(e) for e in self.tree],
            "verified": self.verified,
            "shares": self.shares.to_json()["shares"],
        }


def construct_alternative_shares(
    f: Sequence[Polynomial],
    R: ShareAssignment,
    f_alt: Sequence[Polynomial],
    g: Topology,
    coalition: Sequence[int],
    rng: np.random.Generator,
    coeff_bound: float = 10.0,
) -> ConstructionResult:
    bad = set(coalition)
    good = [v for v in g.nodes if v not in bad]
    R.check_domain(g)
    if len(f) != g.node_count or len(f_alt) != g.node_count:
        raise ValueError("objective vectors must have one entry per agent")

    # step 1
    G = ShareAssignment({e: p for e, p in R.items() if e[0] in bad or e[1] in bad})

    # step 2
    try:
        tree = spanning_tree(delete_adversary_edges(g, bad), good)
    except NotConnected as exc:
        raise NotAdmissible(f"good agents split once coalition {sorted(bad)} links are removed: {exc}") from exc
    tree_set = set(tree)
    free = [e for e in g.directed_edges() if e not in G and e not in tree_set]
    degree = max(
        [p.degree for p in f] + [p.degree for p in f_alt] + [p.degree for p in R.values()] + [1]
    )
    for e in free:
        G[e] = random_polynomial(degree, coeff_bound, zero_constant=True, rng=rng)

    # step 3: rhs = f_hat - f_alt - B_fixed G_fixed
    f_hat = obfuscate(list(f), R, g)
    rhs = [f_hat[i] - f_alt[i] for i in g.nodes]
    for (i, j), p in G.items():
        rhs[j] = rhs[j] - p
        rhs[i] = rhs[i] + p
    for a in sorted(bad):
        if rhs[a].distance(Polynomial.zero()) > RESIDUAL_TOL:
            raise InconsistentAlternative(
                f"coalition agent {a}: pinned observables leave a nonzero remainder {rhs[a]}"
            )

    width = 1 + max(p.degree for p in rhs)
    B_tree = incidence_matrix(g, tree).matrix[good, :]
    rows = [[Fraction(c) for c in rhs[i].padded(width)] for i in good]
    sol = _solve_exact(B_tree, rows)
    for e, coeffs in zip(tree, sol):
        G[e] = Polynomial(float(c) for c in coeffs)

    resid_exact = [
        [sum((int(B_tree[r][t]) * sol[t][d] for t in range(len(tree))), Fraction(0)) - rows[r][d] for d in range(width)]
        for r in range(len(good))
    ]
    residual = float(max((abs(c) for row in resid_exact for c in row), default=Fraction(0)))
    smin = float(np.linalg.svd(B_tree.astype(float), compute_uv=False).min()) if tree else float("inf")
    if residual > RESIDUAL_TOL:
        raise InconsistentAlternative(
            f"spanning-tree solve residual {residual:.3g} exceeds {RESIDUAL_TOL:g}; "
            "alternative objectives do not preserve the aggregate"
        )
    result = ConstructionResult(G, residual, smin, tree)
    result.verified = verify_indistinguishable(f, R, f_alt, G, g, coalition)
    return result


def verify_indistinguishable(
    f: Sequence[Polynomial],
    R: ShareAssignment,
    f_alt: Sequence[Polynomial],
    G: ShareAssignment,
    g: Topology,
    coalition: Sequence[int],
    tol: float = RESIDUAL_TOL,
) -> bool:
    """True iff every quantity the coalition can observe coincides in both worlds."""
    try:
        R.check_domain(g)
        G.check_domain(g)
    except ValueError:
        return False
    bad = set(coalition)
    same_fhat = all(a.isclose(b, tol) for a, b in zip(obfuscate(list(f), R, g), obfuscate(list(f_alt), G, g)))
    same_links = all(R[e] == G[e] for e in g.directed_edges() if e[0] in bad or e[1] in bad)
    same_own = all(f[a] == f_alt[a] for a in bad)
    return same_fhat and same_links and same_own


def observable_table(f, R, f_alt, G, g: Topology, coalition: Sequence[int]) -> list[dict]:
    """Side-by-side listing of every coalition observable in the two executions."""
    bad = sorted(set(coalition))
    rows = []
    for a in bad:
        rows.append({"observable": f"objective[{a}]", "original": f[a].to_json(), "alternative": f_alt[a].to_json(),
                     "equal": f[a] == f_alt[a]})
    for e in g.directed_edges():
        if e[0] in bad or e[1] in bad:
            rows.append({"observable": f"share[{e[0]}->{e[1]}]", "original": R[e].to_json(),
                         "alternative": G[e].to_json(), "equal": R[e] == G[e]})
    for i, (a, b) in enumerate(zip(obfuscate(list(f), R, g), obfuscate(list(f_alt), G, g))):
        rows.append({"observable": f"obfuscated[{i}]", "original": a.to_json(), "alternative": b.to_json(),
                     "equal": a == b})
    return rows


def end_to_end_indistinguishability(a: Scenario, b: Scenario) -> bool:
    """Run both scenarios and compare their public traces bit for bit."""
    ra, rb = a.resolve(), b.resolve()
    if ra.topology != rb.topology or ra.iterations != rb.iterations or ra.step != rb.step:
        raise ValueError("scenarios differ in topology, iteration count or step schedule")
    if ra.initial != rb.initial or not np.array_equal(ra.mixing.entries, rb.mixing.entries):
        raise ValueError("scenarios differ in initial iterates or mixing weights")
    return run(ra).same_execution(run(rb))


def aggregate_preserved(f: Sequence[Polynomial], f_alt: Sequence[Polynomial]) -> bool:
    return aggregate(f) == aggregate(f_alt)
