"""Error hierarchy for the lab.

Every failure raised by the package derives from `LabError`, itself a
`ValueError`, so callers that only care about bad input can keep catching
`ValueError`. The `kind` tag is stable and is what the CLI reports.
"""

from __future__ import annotations


class LabError(ValueError):
    """Raised when input validation or a numerical routine fails."""

    kind = "lab-error"


class InvalidDimensionError(LabError):
    kind = "invalid-dimension"


class VertexBudgetExceededError(LabError):
    kind = "vertex-budget-exceeded"


class PointNotInPolytopeError(LabError):
    kind = "point-not-in-polytope"


class RewardOutOfRangeError(LabError):
    kind = "reward-out-of-range"


class ShapeError(LabError):
    kind = "shape-error"


class BadHorizonError(LabError):
    kind = "bad-horizon"


class BadGraphError(LabError):
    kind = "bad-graph"


class TooLargeGraphError(LabError):
    kind = "too-large-graph"


class StationarySolveError(LabError):
    kind = "stationary-solve-failed"


class FixedPointNotConvergedError(LabError):
    kind = "fixed-point-not-converged"


class LPInfeasibleError(LabError):
    kind = "lp-infeasible"


class DegenerateGameError(LabError):
    kind = "degenerate-game"


class OutOfRangeRoundError(LabError):
    kind = "out-of-range-round"


class UnknownCaseError(LabError):
    kind = "unknown-case"


class UnknownComponentError(LabError):
    kind = "unknown-component"


__all__ = [
    "BadGraphError",
    "BadHorizonError",
    "DegenerateGameError",
    "FixedPointNotConvergedError",
    "InvalidDimensionError",
    "LPInfeasibleError",
    "LabError",
    "OutOfRangeRoundError",
    "PointNotInPolytopeError",
    "RewardOutOfRangeError",
    "ShapeError",
    "StationarySolveError",
    "TooLargeGraphError",
    "UnknownCaseError",
    "UnknownComponentError",
    "VertexBudgetExceededError",
]
