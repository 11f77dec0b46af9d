from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


BASE_DIR = Path(__file__).resolve().parent
OUTPUT_DIR = BASE_DIR.parent / "output"
TRANSCRIPTS_DIR = OUTPUT_DIR / "transcripts"
REPORTS_DIR = OUTPUT_DIR / "reports"
GAMES_DIR = OUTPUT_DIR / "games"

# Membership and containment checks; payoffs have magnitude <= 1.
MEMBERSHIP_TOL = 1e-9
DISTRIBUTION_TOL = 1e-12
LP_TOL = 1e-9
NUMERICALLY_ZERO = 1e-7

VERTEX_BUDGET = 10**6
BAYESIAN_LP_BUDGET = 10**5
HYPERCUBE_MAX_DIM = 12
SWAP_ORACLE_MAX_N = 4
MAX_DOMINATING_SET_VERTICES = 20
POLYTOPE_SWAP_LP_BUDGET = 2 * 10**6

STATIONARY_TOL = 1e-12
STATIONARY_FAIL_TOL = 1e-10
STATIONARY_SMOOTHING = 1e-6
STATIONARY_MAX_ITERS = 20_000

FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITERS = 10**5

DEGENERATE_MARGIN = 1e-9


@dataclass(frozen=True)
class LabSettings:
    """Numerical knobs shared by the solvers; one frozen record per run."""

    membership_tol: float = MEMBERSHIP_TOL
    lp_tol: float = LP_TOL
    numerically_zero: float = NUMERICALLY_ZERO
    vertex_budget: int = VERTEX_BUDGET
    bayesian_lp_budget: int = BAYESIAN_LP_BUDGET
    stationary_tol: float = STATIONARY_TOL
    stationary_fail_tol: float = STATIONARY_FAIL_TOL
    stationary_smoothing: float = STATIONARY_SMOOTHING
    stationary_max_iters: int = STATIONARY_MAX_ITERS
    fixed_point_tol: float = FIXED_POINT_TOL
    fixed_point_max_iters: int = FIXED_POINT_MAX_ITERS
    degenerate_margin: float = DEGENERATE_MARGIN

    def highs_options(self) -> dict[str, float]:
        return {
            "primal_feasibility_tolerance": self.lp_tol,
            "dual_feasibility_tolerance": self.lp_tol,
        }


DEFAULT_SETTINGS = LabSettings()


def ensure_directories() -> None:
    for path in (OUTPUT_DIR, TRANSCRIPTS_DIR, REPORTS_DIR, GAMES_DIR):
        path.mkdir(parents=True, exist_ok=True)
