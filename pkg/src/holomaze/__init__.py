"""holomaze: labyrinth-guided polynomial maps on the complex unit ball.

Builds tangent-ball labyrinths in spherical shells, fits polynomial
corrections so the candidate map takes prescribed large or small values on
them, and independently verifies path-length, level-set, and zero-set
properties of the result.
"""

from .geometry import (
    Shell,
    TangentBall,
    TidyCertificate,
    TidyViolation,
    as_complex,
    as_real,
    dist_to_tangent_ball,
    outermost_radius,
    validate_tidy,
)
from .polynomials import (
    CandidateMap,
    Divisor,
    EpsilonBudget,
    MultiPoly,
    cauchy_epsilon,
    min_rank_margin,
)

__all__ = [
    "Shell",
    "TangentBall",
    "TidyCertificate",
    "TidyViolation",
    "as_complex",
    "as_real",
    "dist_to_tangent_ball",
    "outermost_radius",
    "validate_tidy",
    "CandidateMap",
    "Divisor",
    "EpsilonBudget",
    "MultiPoly",
    "cauchy_epsilon",
    "min_rank_margin",
]

__version__ = "0.1.0"
