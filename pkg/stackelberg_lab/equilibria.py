"""Benchmark solvers: Stackelberg values, PerConVal, CorrVal and the dominating-set oracle.

The Stackelberg value of a polytope game is found vertex by vertex: for each
vertex v of P one LP over the optimizer's mixed strategy maximises the
optimizer's payoff subject to v being a (weak) best response. Weak
inequalities give ties to the optimizer. Vertices whose payoff upper bound
cannot beat the incumbent are skipped, and the reduction is a deterministic
max with smallest-index tie-breaking, so the answer does not depend on the
number of worker threads.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import DEFAULT_SETTINGS, LP_TOL, MAX_DOMINATING_SET_VERTICES, LabSettings
from .errors import LPInfeasibleError, ShapeError, TooLargeGraphError, VertexBudgetExceededError
from .games import BayesianGame, PolytopeGame, StandardGame, Transcript, bayesian_to_polytope, standard_to_polytope
from .generators import Graph
from .geometry import product_choices
from .lp import solve_lp

LOGGER = logging.getLogger(__name__)


@dataclass
class StackelbergSolution:
    """Optimizer commitment and the learner vertex it induces.

    `response` indexes V(P); for games over a product of simplices
    `response_map` gives the learner's action per context. `candidates`
    lists every vertex whose LP value is optimal within tolerance, with the
    strategy that makes each of them a best response.
    """

    value: float
    strategy: np.ndarray
    response: int
    response_point: np.ndarray
    response_map: Optional[Tuple[int, ...]] = None
    margin: float = 0.0
    candidates: Tuple[int, ...] = ()
    candidate_strategies: Dict[int, np.ndarray] = field(default_factory=dict)
    lps_solved: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "strategy": self.strategy.tolist(),
            "response": self.response,
            "response_point": self.response_point.tolist(),
            "response_map": None if self.response_map is None else list(self.response_map),
            "margin": self.margin,
            "candidates": list(self.candidates),
            "lps_solved": self.lps_solved,
        }


@dataclass
class CorrelatedSolution:
    value: float
    F: np.ndarray
    epsilon: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {"value": self.value, "epsilon": self.epsilon, "F": self.F.tolist()}


@dataclass(frozen=True)
class CEViolation:
    """Largest violation of each family of one-sided CE constraints."""

    misreport: float
    swap: float

    @property
    def worst(self) -> float:
        return max(0.0, self.misreport, self.swap)


class _VertexSet:
    """Vertices of P plus the per-vertex best-response rows, blockwise for simplex products."""

    def __init__(self, G: PolytopeGame, settings: LabSettings) -> None:
        P = G.P
        if P.n_vertices > settings.vertex_budget:
            raise VertexBudgetExceededError(f"P has {P.n_vertices} vertices, above the budget of {settings.vertex_budget}")
        self.game = G
        self.structure = P.structure
        self.vertices = P.vertex_array()
        self.choices = product_choices(self.structure.N, self.structure.C) if self.structure else None

    def __len__(self) -> int:
        return int(self.vertices.shape[0])

    def upper_bounds(self) -> np.ndarray:
        """max_i <s_i, v> for every vertex: no strategy can earn more at v."""
        return np.max(self.game.S @ self.vertices.T, axis=0)

    def deviation_rows(self, v: int) -> np.ndarray:
        """Rows a with a . lambda = <r_lambda, v' - v>, one per relevant deviation v'."""
        R = self.game.R
        if self.structure is not None:
            N, C = self.structure.N, self.structure.C
            blocks = R.reshape(R.shape[0], C, N)
            choice = self.choices[v]
            own = blocks[:, np.arange(C), choice]
            mask = np.ones((C, N), dtype=bool)
            mask[np.arange(C), choice] = False
            return (blocks - own[:, :, None])[:, mask].T
        diffs = np.delete(self.vertices, v, axis=0) - self.vertices[v]
        return diffs @ R.T

    def response_map(self, v: int) -> Optional[Tuple[int, ...]]:
        return None if self.choices is None else tuple(int(j) for j in self.choices[v])


def _solve_vertex(vs: _VertexSet, v: int, settings: LabSettings) -> Optional[Tuple[float, np.ndarray]]:
    G = vs.game
    k = G.n_q
    rows = vs.deviation_rows(v)
    sol = solve_lp(
        G.S @ vs.vertices[v],
        A_ub=rows if rows.size else None,
        b_ub=np.zeros(rows.shape[0]) if rows.size else None,
        A_eq=np.ones((1, k)),
        b_eq=np.ones(1),
        maximize=True,
        label=f"stackelberg-vertex-{v}",
        allow_infeasible=True,
        settings=settings,
    )
    if sol is None:
        return None
    strategy = np.clip(sol.x, 0.0, None)
    strategy /= strategy.sum()
    return float(strategy @ G.S @ vs.vertices[v]), strategy


def stackelberg_polytope(
    G: PolytopeGame, *, workers: int = 1, settings: LabSettings = DEFAULT_SETTINGS
) -> StackelbergSolution:
    vs = _VertexSet(G, settings)
    bounds = vs.upper_bounds()
    order = np.argsort(-bounds, kind="stable")
    results: Dict[int, Tuple[float, np.ndarray]] = {}
    best = -np.inf
    chunk = max(1, int(workers))
    solved = 0

    executor = ThreadPoolExecutor(max_workers=chunk) if chunk > 1 else None
    try:
        for start in range(0, len(order), chunk):
            batch = [int(v) for v in order[start : start + chunk] if bounds[v] >= best - LP_TOL]
            if not batch:
                # Bounds are sorted, so nothing later can reach the incumbent.
                break
            if executor is None:
                outcomes = [_solve_vertex(vs, v, settings) for v in batch]
            else:
                outcomes = list(executor.map(lambda v: _solve_vertex(vs, v, settings), batch))
            solved += len(batch)
            for v, outcome in zip(batch, outcomes):
                if outcome is None:
                    continue
                results[v] = outcome
                best = max(best, outcome[0])
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    if not results:
        raise LPInfeasibleError("No vertex of P is a best response to any optimizer strategy")
    candidates = tuple(sorted(v for v, (value, _) in results.items() if value >= best - LP_TOL))
    chosen = candidates[0]
    value, strategy = results[chosen]
    LOGGER.debug(
        "stackelberg_polytope: %s of %s vertex LPs solved, value %.9g at vertex %s (%s optimal)",
        solved,
        len(vs),
        value,
        chosen,
        len(candidates),
    )
    return StackelbergSolution(
        value=value,
        strategy=strategy,
        response=chosen,
        response_point=vs.vertices[chosen].copy(),
        response_map=vs.response_map(chosen),
        candidates=candidates,
        candidate_strategies={v: results[v][1] for v in candidates},
        lps_solved=solved,
    )


def stackelberg_standard(G: StandardGame, *, settings: LabSettings = DEFAULT_SETTINGS) -> StackelbergSolution:
    return stackelberg_polytope(standard_to_polytope(G), settings=settings)


def stackelberg_bayesian(
    G: BayesianGame, *, workers: int = 1, settings: LabSettings = DEFAULT_SETTINGS
) -> StackelbergSolution:
    """Exhaustive over response maps [C] -> [N]; one LP per map."""
    count = G.N**G.C
    if count > settings.bayesian_lp_budget:
        raise VertexBudgetExceededError(
            f"{G.N}^{G.C} = {count} response maps exceed the Bayesian LP budget of {settings.bayesian_lp_budget}"
        )
    return stackelberg_polytope(bayesian_to_polytope(G), workers=workers, settings=settings)


def verify_stackelberg(G: PolytopeGame, solution: StackelbergSolution, tol: float = 1e-8) -> bool:
    """Recompute the value and check the stored response is a weak best response."""
    point = solution.response_point
    value = float(solution.strategy @ G.S @ point)
    if abs(value - solution.value) > tol:
        return False
    reward = solution.strategy @ G.R
    structure = G.P.structure
    if structure is not None:
        blocks = reward.reshape(structure.C, structure.N)
        chosen = (blocks * point.reshape(structure.C, structure.N)).sum(axis=1)
        return bool(np.all(chosen >= blocks.max(axis=1) - tol))
    return bool(reward @ point >= np.max(G.P.vertex_array() @ reward) - tol)


def margin_lp(
    G: PolytopeGame, vertex: int, *, settings: LabSettings = DEFAULT_SETTINGS
) -> Tuple[float, np.ndarray]:
    """Largest delta such that some strategy makes `vertex` a best response by delta.

    Returns (delta, strategy). On products of simplices single-block
    deviations suffice: a multi-block deviation loses the sum of its blocks.
    """
    vs = _VertexSet(G, settings)
    rows = vs.deviation_rows(vertex)
    k = G.n_q
    if rows.size == 0:
        return float("inf"), np.full(k, 1.0 / k)
    # Variables (lambda, delta): rows . lambda + delta <= 0.
    A_ub = np.hstack([rows, np.ones((rows.shape[0], 1))])
    objective = np.append(np.zeros(k), 1.0)
    sol = solve_lp(
        objective,
        A_ub=A_ub,
        b_ub=np.zeros(rows.shape[0]),
        A_eq=np.append(np.ones(k), 0.0)[None, :],
        b_eq=np.ones(1),
        bounds=[(0, None)] * k + [(None, None)],
        maximize=True,
        label=f"margin-vertex-{vertex}",
        settings=settings,
    )
    assert sol is not None
    strategy = np.clip(sol.x[:k], 0.0, None)
    return float(sol.objective), strategy / strategy.sum()


def per_context_solutions(G: BayesianGame, *, settings: LabSettings = DEFAULT_SETTINGS) -> List[StackelbergSolution]:
    return [stackelberg_standard(G.context_slice(c), settings=settings) for c in range(G.C)]


def per_context_val(G: BayesianGame, *, settings: LabSettings = DEFAULT_SETTINGS) -> float:
    """sum_c p_c Val(G_c)."""
    solutions = per_context_solutions(G, settings=settings)
    return float(sum(p * sol.value for p, sol in zip(G.p, solutions)))


def _ce_program(G: BayesianGame, epsilon: float, misreport: bool, settings: LabSettings) -> CorrelatedSolution:
    M, N, C = G.M, G.N, G.C
    size = M * N
    n_vars = C * size

    def block(c: int) -> slice:
        return slice(c * size, (c + 1) * size)

    objective = (np.transpose(G.u_O, (2, 0, 1)) * G.p[:, None, None]).reshape(-1)
    A_eq = np.zeros((C, n_vars))
    for c in range(C):
        A_eq[c, block(c)] = 1.0

    rows: List[np.ndarray] = []
    if misreport:
        for c, c_report in itertools.permutations(range(C), 2):
            row = np.zeros(n_vars)
            u = G.u_L[:, :, c].reshape(-1)
            row[block(c_report)] += u
            row[block(c)] -= u
            rows.append(row)
    for c in range(C):
        u = G.u_L[:, :, c]
        for j, j_alt in itertools.permutations(range(N), 2):
            coeffs = np.zeros((M, N))
            coeffs[:, j] = u[:, j_alt] - u[:, j]
            row = np.zeros(n_vars)
            row[block(c)] = coeffs.reshape(-1)
            rows.append(row)

    A_ub = np.vstack(rows) if rows else None
    b_ub = np.full(len(rows), float(epsilon)) if rows else None
    sol = solve_lp(
        objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=np.ones(C),
        maximize=True,
        label="corr-val" if misreport else "perconval-ce",
        settings=settings,
    )
    assert sol is not None
    F = np.clip(sol.x, 0.0, None).reshape(C, M, N)
    F /= F.sum(axis=(1, 2), keepdims=True)
    return CorrelatedSolution(value=sol.objective, F=F, epsilon=float(epsilon))


def corr_val(
    G: BayesianGame, epsilon: float = 0.0, *, settings: LabSettings = DEFAULT_SETTINGS
) -> CorrelatedSolution:
    """Best optimizer value over (epsilon-approximate) one-sided correlated equilibria."""
    if epsilon < 0:
        raise ShapeError(f"epsilon must be nonnegative, got {epsilon}")
    return _ce_program(G, epsilon, misreport=True, settings=settings)


def perconval_via_ce(G: BayesianGame, *, settings: LabSettings = DEFAULT_SETTINGS) -> float:
    """The CorrVal program without misreport constraints; equals PerConVal."""
    return _ce_program(G, 0.0, misreport=False, settings=settings).value


def _check_profile(G: BayesianGame, F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.shape != (G.C, G.M, G.N):
        raise ShapeError(f"Profile has shape {F.shape}, expected ({G.C}, {G.M}, {G.N})")
    return F


def profile_violation(G: BayesianGame, F: np.ndarray) -> CEViolation:
    """Largest misreport and pairwise-swap violations of a profile F[c, i, j]."""
    F = _check_profile(G, F)
    # reported[c, d] = E_{F_d}[u_L(., ., c)]
    reported = np.einsum("dij,ijc->cd", F, G.u_L)
    honest = np.diag(reported)
    gaps = reported - honest[:, None]
    np.fill_diagonal(gaps, -np.inf)
    misreport = float(np.max(gaps)) if G.C > 1 else 0.0
    # swapped[c, j, k] = sum_i F_c(i, j) u_L(i, k, c)
    swapped = np.einsum("cij,ikc->cjk", F, G.u_L)
    kept = np.einsum("cij,ijc->cj", F, G.u_L)
    swap = float(np.max(swapped - kept[:, :, None]))
    return CEViolation(misreport=misreport, swap=swap)


def verify_correlated(G: BayesianGame, solution: CorrelatedSolution, tol: float = 1e-8) -> bool:
    F = _check_profile(G, solution.F)
    if np.any(F < -tol) or np.max(np.abs(F.sum(axis=(1, 2)) - 1.0)) > tol:
        return False
    value = float(np.einsum("c,cij,ijc->", G.p, F, G.u_O))
    if abs(value - solution.value) > tol:
        return False
    return profile_violation(G, F).worst <= solution.epsilon + tol


def empirical_profile(G: BayesianGame, transcript: Transcript) -> np.ndarray:
    """F'_c(i, j) = (1/T) sum_t alpha^t_i beta^t(c)_j."""
    q = transcript.q_weights
    x = transcript.x
    if q.shape[1] != G.M or x.shape[1] != G.N * G.C:
        raise ShapeError(
            f"Transcript with |Q| = {q.shape[1]}, d = {x.shape[1]} does not belong to a game with M = {G.M}, N*C = {G.N * G.C}"
        )
    beta = x.reshape(transcript.T, G.C, G.N)
    return np.einsum("ti,tcj->cij", q, beta) / transcript.T


def ce_violation_breakdown(G: BayesianGame, transcript: Transcript) -> CEViolation:
    return profile_violation(G, empirical_profile(G, transcript))


def ce_violation(G: BayesianGame, transcript: Transcript) -> float:
    """Largest violation of any CE constraint by the transcript's average profile."""
    return ce_violation_breakdown(G, transcript).worst


def min_dominating_set(H: Graph) -> int:
    """Exact minimum dominating set size by increasing-size subset search."""
    if H.V > MAX_DOMINATING_SET_VERTICES:
        raise TooLargeGraphError(f"Graph has {H.V} vertices; exact search is limited to {MAX_DOMINATING_SET_VERTICES}")
    full = (1 << H.V) - 1
    closed = [(1 << v) | sum(1 << u for u in H.neighbors(v)) for v in range(H.V)]
    # A set of size k covers at most k * (max degree + 1) vertices.
    reach = H.max_degree + 1
    for size in range(1, H.V + 1):
        if size * reach < H.V:
            continue
        for subset in itertools.combinations(range(H.V), size):
            covered = 0
            for v in subset:
                covered |= closed[v]
            if covered == full:
                return size
    return H.V


def hardness_value(H: Graph, D: Optional[int] = None) -> float:
    """(V - D) / (4 V^2), the Stackelberg value of dominating_set_game(H)."""
    D = min_dominating_set(H) if D is None else D
    return (H.V - D) / (4.0 * H.V**2)


def benchmark_chain(G: BayesianGame, *, settings: LabSettings = DEFAULT_SETTINGS) -> Dict[str, float]:
    """Val, CorrVal and PerConVal of one Bayesian game."""
    return {
        "val": stackelberg_bayesian(G, settings=settings).value,
        "corr_val": corr_val(G, settings=settings).value,
        "per_con_val": per_context_val(G, settings=settings),
    }


def chain_holds(values: Dict[str, float], tol: float = 1e-8) -> bool:
    return values["val"] <= values["corr_val"] + tol and values["corr_val"] <= values["per_con_val"] + tol


__all__ = [
    "CEViolation",
    "CorrelatedSolution",
    "StackelbergSolution",
    "benchmark_chain",
    "ce_violation",
    "ce_violation_breakdown",
    "chain_holds",
    "corr_val",
    "empirical_profile",
    "hardness_value",
    "margin_lp",
    "min_dominating_set",
    "per_context_solutions",
    "per_context_val",
    "perconval_via_ce",
    "profile_violation",
    "stackelberg_bayesian",
    "stackelberg_polytope",
    "stackelberg_standard",
    "verify_correlated",
    "verify_stackelberg",
]
