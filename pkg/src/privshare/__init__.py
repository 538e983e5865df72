"""Privacy-preserving distributed optimization by function sharing."""

from .graph import Topology, incidence_matrix, is_f_admissible, metropolis_mixing, vertex_connectivity
from .obfuscation import ShareAssignment, aggregate, check_invariant, generate_shares, obfuscate
from .optimizer import ExecutionTrace, FeasibleSet, Scenario, StepSchedule, metrics, run
from .polynomial import Polynomial, least_squares_fit, random_polynomial

__all__ = [
    "ExecutionTrace",
    "FeasibleSet",
    "Polynomial",
    "Scenario",
    "ShareAssignment",
    "StepSchedule",
    "Topology",
    "aggregate",
    "check_invariant",
    "generate_shares",
    "incidence_matrix",
    "is_f_admissible",
    "least_squares_fit",
    "metrics",
    "metropolis_mixing",
    "obfuscate",
    "random_polynomial",
    "run",
    "vertex_connectivity",
]
