"""Dense univariate polynomials with real coefficients.

Coefficients are stored lowest degree first, so ``Polynomial([0, 0, 1, 0, 1])``
is x^2 + x^4. Values are immutable and hashable.

Randomly drawn coefficients are snapped to a dyadic grid (multiples of
``COEFF_GRID``). Sums and differences of grid values with moderate magnitude
are exactly representable in double precision, which is what lets share
algebra (obfuscation, aggregate invariance, alternative-share construction)
be checked with exact equality instead of a tolerance.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

COEFF_GRID = 2.0**-20


class DegenerateFit(ValueError):
    """The Vandermonde system of a fit is rank deficient."""


class Polynomial:
    """Real polynomial sum(coeffs[i] * x**i)."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Iterable[float] = ()):
        c = [float(a) for a in coeffs]
        while c and c[-1] == 0.0:
            c.pop()
        self._coeffs = tuple(c)

    @classmethod
    def zero(cls) -> Polynomial:
        return cls(())

    @classmethod
    def monomial(cls, degree: int, coeff: float = 1.0) -> Polynomial:
        return cls([0.0] * degree + [coeff])

    @property
    def coeffs(self) -> tuple[float, ...]:
        return self._coeffs

    @property
    def degree(self) -> int:
        # zero polynomial has degree 0 by convention
        return max(len(self._coeffs) - 1, 0)

    def is_zero(self) -> bool:
        return not self._coeffs

    def coeff(self, i: int) -> float:
        return self._coeffs[i] if 0 <= i < len(self._coeffs) else 0.0

    def padded(self, length: int) -> list[float]:
        """Coefficient list padded with zeros (or truncated) to ``length``."""
        return [self.coeff(i) for i in range(length)]

    # -- group structure -------------------------------------------------

    def __add__(self, other: Polynomial) -> Polynomial:
        if not isinstance(other, Polynomial):
            return NotImplemented
        n = max(len(self._coeffs), len(other._coeffs))
        return Polynomial(self.coeff(i) + other.coeff(i) for i in range(n))

    def __neg__(self) -> Polynomial:
        return Polynomial(-a for a in self._coeffs)

    def __sub__(self, other: Polynomial) -> Polynomial:
        if not isinstance(other, Polynomial):
            return NotImplemented
        n = max(len(self._coeffs), len(other._coeffs))
        return Polynomial(self.coeff(i) - other.coeff(i) for i in range(n))

    def scale(self, k: float) -> Polynomial:
        return Polynomial(k * a for a in self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(self._coeffs)

    # -- calculus ----------------------------------------------------------

    def __call__(self, x: float) -> float:
        return self.evaluate(x)

    def evaluate(self, x: float) -> float:
        """Horner evaluation."""
        acc = 0.0
        for a in reversed(self._coeffs):
            acc = acc * x + a
        return acc

    def derivative(self) -> Polynomial:
        return Polynomial(i * a for i, a in enumerate(self._coeffs) if i > 0)

    def antiderivative(self) -> Polynomial:
        """Formal antiderivative with the constant of integration set to 0."""
        return Polynomial([0.0] + [a / (i + 1) for i, a in enumerate(self._coeffs)])

    def drop_constant(self) -> Polynomial:
        return Polynomial((0.0,) + self._coeffs[1:])

    # -- comparison helpers --------------------------------------------------

    def distance(self, other: Polynomial, *, ignore_constant: bool = False) -> float:
        """Largest absolute coefficient difference."""
        n = max(len(self._coeffs), len(other._coeffs))
        start = 1 if ignore_constant else 0
        return max((abs(self.coeff(i) - other.coeff(i)) for i in range(start, n)), default=0.0)

    def isclose(self, other: Polynomial, atol: float = 1e-9, *, ignore_constant: bool = False) -> bool:
        return self.distance(other, ignore_constant=ignore_constant) <= atol

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> list[float]:
        return list(self._coeffs)

    @classmethod
    def from_json(cls, data: Sequence[float]) -> Polynomial:
        if not isinstance(data, (list, tuple)):
            raise TypeError(f"polynomial must be a list of coefficients, got {type(data).__name__}")
        return cls(data)

    def __repr__(self) -> str:
        return f"Polynomial({list(self._coeffs)!r})"

    def __str__(self) -> str:
        if not self._coeffs:
            return "0"
        terms = []
        for i, a in enumerate(self._coeffs):
            if a == 0.0:
                continue
            mag = f"{abs(a):g}"
            if i == 0:
                body = mag
            else:
                power = "x" if i == 1 else f"x^{i}"
                body = power if mag == "1" else f"{mag}{power}"
            terms.append(("-" if a < 0 else "+", body))
        head_sign, head = terms[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


def total(polys: Iterable[Polynomial]) -> Polynomial:
    acc = Polynomial.zero()
    for p in polys:
        acc = acc + p
    return acc


def least_squares_fit(points: Sequence[tuple[float, float]], degree: int, rcond: float = 1e-12) -> Polynomial:
    """Least-squares polynomial of at most ``degree`` through ``points``.

    Solves the Vandermonde system with an orthogonal (SVD based) solver. Raises
    DegenerateFit when there are too few distinct abscissae or the system is
    numerically rank deficient.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if len(points) < degree + 1:
        raise DegenerateFit(f"need at least {degree + 1} points for degree {degree}, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if len(np.unique(xs)) < degree + 1:
        raise DegenerateFit(f"only {len(np.unique(xs))} distinct abscissae for degree {degree}")
    V = np.vander(xs, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(V, ys, rcond=rcond)
    if rank < degree + 1:
        raise DegenerateFit(f"Vandermonde rank {rank} < {degree + 1}")
    return Polynomial(coeffs)


def snap_to_grid(values: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(values, dtype=float) / COEFF_GRID) * COEFF_GRID


def random_polynomial(
    degree: int,
    coeff_bound: float,
    zero_constant: bool = False,
    rng: np.random.Generator | None = None,
) -> Polynomial:
    """Polynomial with coefficients drawn uniformly from [-coeff_bound, coeff_bound].

    Draws are snapped to ``COEFF_GRID`` so that later share arithmetic is exact.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if coeff_bound <= 0:
        raise ValueError("coeff_bound must be positive")
    rng = rng if rng is not None else np.random.default_rng()
    c = snap_to_grid(rng.uniform(-coeff_bound, coeff_bound, size=degree + 1))
    if zero_constant:
        c[0] = 0.0
    return Polynomial(c)
