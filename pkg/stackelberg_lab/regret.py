"""Transcript auditors for external, swap, contextual, linear swap and polytope swap regret.

Each auditor returns a `RegretReport` carrying its witness; re-evaluating the
witness against the same transcript reproduces the value. Linear and
polytope swap regret are solved exactly as linear programs; the brute-force
oracles at the bottom exist to cross-check them on small instances.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import sparse

from .config import (
    DEFAULT_SETTINGS,
    MEMBERSHIP_TOL,
    NUMERICALLY_ZERO,
    POLYTOPE_SWAP_LP_BUDGET,
    SWAP_ORACLE_MAX_N,
    LabSettings,
)
from .errors import InvalidDimensionError, PointNotInPolytopeError, ShapeError, VertexBudgetExceededError
from .geometry import Polytope, contraction_constraints, integral_contractions
from .lp import solve_lp

LOGGER = logging.getLogger(__name__)

NOTIONS = ("external", "swap", "contextual_external", "linear_swap", "polytope_swap")

ORACLE_MAX_PLANS = 200_000
# Largest |V|^|V| the diagnostics scan for integral contractions.
INTEGRAL_MAP_BUDGET = 5**5


@dataclass
class RegretReport:
    notion: str
    value: float
    witness: Dict[str, Any] = field(default_factory=dict)
    numerically_zero: bool = False

    def to_dict(self) -> Dict[str, Any]:
        witness = {
            key: (val.tolist() if isinstance(val, np.ndarray) else val) for key, val in self.witness.items()
        }
        return {
            "notion": self.notion,
            "value": self.value,
            "numerically_zero": self.numerically_zero,
            "witness": witness,
        }


def _report(notion: str, value: float, witness: Dict[str, Any]) -> RegretReport:
    return RegretReport(notion=notion, value=float(value), witness=witness, numerically_zero=abs(value) < NUMERICALLY_ZERO)


def _paired(rewards: Any, actions: Any) -> Tuple[np.ndarray, np.ndarray]:
    r = np.asarray(rewards, dtype=float)
    x = np.asarray(actions, dtype=float)
    if r.ndim != 2 or r.shape != x.shape:
        raise ShapeError(f"Rewards {r.shape} and actions {x.shape} must both be (T, d)")
    return r, x


def _argmax_prefer(values: np.ndarray, preferred: int, tol: float = 1e-12) -> int:
    """Argmax that keeps `preferred` on ties, otherwise the smallest index."""
    best = float(np.max(values))
    if values[preferred] >= best - tol:
        return preferred
    return int(np.flatnonzero(values >= best - tol)[0])


def external_regret(rewards: Any, actions: Any) -> RegretReport:
    r, x = _paired(rewards, actions)
    totals = r.sum(axis=0)
    best = int(np.argmax(totals))
    value = totals[best] - float(np.sum(r * x))
    return _report("external", value, {"action": best})


def swap_gain(rewards: Any, actions: Any, pi: Any) -> float:
    """Realized gain sum_t sum_j beta^t_j (r^t_{pi(j)} - r^t_j) of a swap function."""
    r, x = _paired(rewards, actions)
    mapping = np.asarray(pi, dtype=int)
    return float(np.sum(x * (r[:, mapping] - r)))


def swap_regret(rewards: Any, actions: Any) -> RegretReport:
    """Best swap function, chosen independently for each source action."""
    r, x = _paired(rewards, actions)
    # gains[j, j'] = sum_t beta^t_j r^t_{j'}
    gains = x.T @ r
    pi = [_argmax_prefer(gains[j], j) for j in range(gains.shape[0])]
    value = float(sum(gains[j, pi[j]] - gains[j, j] for j in range(gains.shape[0])))
    return _report("swap", value, {"pi": pi})


def brute_force_swap_regret(rewards: Any, actions: Any) -> float:
    """Maximum over all N^N swap functions; capped at small N."""
    r, x = _paired(rewards, actions)
    N = r.shape[1]
    if N > SWAP_ORACLE_MAX_N:
        raise InvalidDimensionError(f"Brute-force swap oracle is limited to N <= {SWAP_ORACLE_MAX_N}")
    return max(swap_gain(r, x, pi) for pi in itertools.product(range(N), repeat=N))


def contextual_external_regret(p: Any, rewards: Any, actions: Any) -> RegretReport:
    """Regret to the best context-to-action map; rewards and actions are (T, C, N)."""
    weights = np.asarray(p, dtype=float)
    r = np.asarray(rewards, dtype=float)
    x = np.asarray(actions, dtype=float)
    if r.ndim != 3 or r.shape != x.shape or weights.shape != (r.shape[1],):
        raise ShapeError(f"Expected rewards/actions of shape (T, C, N) and p of shape (C,), got {r.shape}, {x.shape}, {weights.shape}")
    totals = r.sum(axis=0)
    f_star = [int(np.argmax(row)) for row in totals]
    best = sum(weights[c] * totals[c, f_star[c]] for c in range(len(f_star)))
    realized = float(np.einsum("c,tcj,tcj->", weights, r, x))
    return _report("contextual_external", best - realized, {"f": f_star})


def linear_gain(rewards: Any, actions: Any, M: Any) -> float:
    """sum_t <r^t, M x^t> - <r^t, x^t>."""
    r, x = _paired(rewards, actions)
    matrix = np.asarray(M, dtype=float)
    return float(np.sum(r * (x @ matrix.T)) - np.sum(r * x))


def _check_points(P: Polytope, x: np.ndarray) -> None:
    if x.shape[1] != P.dim:
        raise ShapeError(f"Actions have dimension {x.shape[1]}, P has {P.dim}")
    for t, point in enumerate(x, start=1):
        if not P.contains(point, MEMBERSHIP_TOL):
            raise PointNotInPolytopeError(f"Learner action at round {t} lies outside P")


def linear_swap_regret(
    P: Polytope, rewards: Any, actions: Any, *, settings: LabSettings = DEFAULT_SETTINGS
) -> RegretReport:
    """max over M in M(P) of sum_t <r^t, M x^t>, minus the realized reward; one LP."""
    r, x = _paired(rewards, actions)
    _check_points(P, x)
    d = P.dim
    system = contraction_constraints(P)
    # <r, M x> = sum_{i,k} M[i,k] r_i x_k, so the objective is vec(sum_t r^t x^t^T).
    objective = (r.T @ x).reshape(-1)
    sol = solve_lp(
        objective,
        A_ub=system.A_ub if system.A_ub.size else None,
        b_ub=system.b_ub if system.A_ub.size else None,
        A_eq=system.A_eq if system.A_eq.size else None,
        b_eq=system.b_eq if system.A_eq.size else None,
        bounds=(None, None),
        maximize=True,
        label="linear-swap-regret",
        settings=settings,
    )
    assert sol is not None
    M = sol.x.reshape(d, d)
    value = sol.objective - float(np.sum(r * x))
    return _report("linear_swap", value, {"M": M})


def integral_linear_swap_regret(P: Polytope, rewards: Any, actions: Any, *, max_maps: int = 10**5) -> RegretReport:
    """Best gain over the vertex maps of P that extend to linear contractions.

    A lower bound on linear swap regret that needs no LP; on a simplex the
    maps are all N^N swap functions and the bound is the swap regret itself.
    """
    r, x = _paired(rewards, actions)
    _check_points(P, x)
    best_value, best_mapping = 0.0, list(range(P.n_vertices))
    for contraction in integral_contractions(P, max_maps=max_maps):
        gain = linear_gain(r, x, contraction.matrix)
        if gain > best_value + 1e-12:
            best_value, best_mapping = gain, list(contraction.mapping)
    return _report("integral_linear_swap", best_value, {"mapping": best_mapping})


def _vertex_swap_witness(plan: np.ndarray, payoffs: np.ndarray) -> Tuple[list[int], np.ndarray]:
    """Per-vertex argmax over swap targets of sum_t rho^t_v <r^t, v'>."""
    # table[v, v'] = sum_t rho^t_v <r^t, v'>
    table = plan.T @ payoffs
    pi = [_argmax_prefer(table[v], v) for v in range(table.shape[0])]
    return pi, table


def polytope_swap_regret(
    P: Polytope, rewards: Any, actions: Any, *, settings: LabSettings = DEFAULT_SETTINGS
) -> RegretReport:
    """min over decompositions rho^t, max over vertex swaps, as one epigraph LP.

    Variables are rho^t_v (T*|V|) followed by z_v (|V|); the inner max over
    swaps splits into independent per-vertex maxima, bounded by z_v.
    """
    r, x = _paired(rewards, actions)
    _check_points(P, x)
    V = P.vertex_array()
    T, k = r.shape[0], V.shape[0]
    n_vars = T * k + k
    if n_vars > POLYTOPE_SWAP_LP_BUDGET:
        raise VertexBudgetExceededError(f"Polytope swap LP would have {n_vars} variables")
    payoffs = r @ V.T  # payoffs[t, v'] = <r^t, v'>

    # Equalities: sum_v rho^t_v v = x^t and sum_v rho^t_v = 1, for every t.
    lifted = sparse.csr_matrix(np.vstack([V.T, np.ones((1, k))]))
    A_eq = sparse.hstack([sparse.kron(sparse.identity(T, format="csr"), lifted), sparse.csr_matrix((T * (P.dim + 1), k))])
    b_eq = np.hstack([x, np.ones((T, 1))]).reshape(-1)

    # Epigraph: sum_t rho^t_v <r^t, v'> - z_v <= 0 for every (v, v').
    rows, cols, vals = [], [], []
    for v in range(k):
        for target in range(k):
            row = v * k + target
            rows.extend([row] * (T + 1))
            cols.extend(list(np.arange(T) * k + v) + [T * k + v])
            vals.extend(list(payoffs[:, target]) + [-1.0])
    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(k * k, n_vars))
    b_ub = np.zeros(k * k)

    c = np.concatenate([np.zeros(T * k), np.ones(k)])
    bounds = [(0, None)] * (T * k) + [(None, None)] * k
    sol = solve_lp(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, label="polytope-swap-regret", settings=settings)
    assert sol is not None
    plan = np.clip(sol.x[: T * k].reshape(T, k), 0.0, None)
    pi, table = _vertex_swap_witness(plan, payoffs)
    value = sol.objective - float(np.sum(r * x))
    LOGGER.debug("polytope_swap_regret: T=%s |V|=%s value=%.6g", T, k, value)
    return _report("polytope_swap", value, {"rho": plan, "pi": pi})


def polytope_swap_value(P: Polytope, rewards: Any, actions: Any, rho: Any, pi: Any) -> float:
    """Counterfactual gain of the vertex swap pi applied to the decompositions rho."""
    r, x = _paired(rewards, actions)
    V = P.vertex_array()
    plan = np.asarray(rho, dtype=float)
    payoffs = r @ V.T
    mapping = np.asarray(pi, dtype=int)
    return float(np.sum(plan * payoffs[:, mapping]) - np.sum(r * x))


@dataclass
class ContextualSwapDiagnostics:
    per_context_swap: list[float]
    weighted_swap: float
    linear_swap: RegretReport
    polytope_swap: Optional[RegretReport]
    integral_linear_swap: Optional[RegretReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_context_swap": self.per_context_swap,
            "weighted_swap": self.weighted_swap,
            "linear_swap": self.linear_swap.to_dict(),
            "polytope_swap": None if self.polytope_swap is None else self.polytope_swap.to_dict(),
            "integral_linear_swap": (
                None if self.integral_linear_swap is None else self.integral_linear_swap.to_dict()
            ),
        }


def contextual_swap_diagnostics(
    P: Polytope, p: Any, rewards: Any, actions: Any, *, settings: LabSettings = DEFAULT_SETTINGS
) -> ContextualSwapDiagnostics:
    """Per-context swap regret next to linear and polytope swap regret of one transcript.

    Rewards are the p_c-scaled vectors of a Bayesian polytope game; each
    context block is unscaled before its swap regret is measured. Polytope
    swap regret is skipped when its LP would exceed the budget, and the
    integral-contraction bound when P has more than 5 vertices.
    """
    r, x = _paired(rewards, actions)
    structure = P.structure
    if structure is None:
        raise InvalidDimensionError("Contextual diagnostics need a product-of-simplices polytope")
    N, C = structure.N, structure.C
    weights = np.asarray(p, dtype=float)
    if weights.shape != (C,):
        raise ShapeError(f"p has shape {weights.shape}, expected ({C},)")
    per_context = []
    for c in range(C):
        block = slice(c * N, (c + 1) * N)
        scale = weights[c] if weights[c] > 0 else 1.0
        per_context.append(swap_regret(r[:, block] / scale, x[:, block]).value)
    poly: Optional[RegretReport] = None
    if P.vertices is not None and r.shape[0] * (P.n_vertices + 1) <= POLYTOPE_SWAP_LP_BUDGET:
        poly = polytope_swap_regret(P, r, x, settings=settings)
    integral: Optional[RegretReport] = None
    if P.vertices is not None and P.n_vertices**P.n_vertices <= INTEGRAL_MAP_BUDGET:
        integral = integral_linear_swap_regret(P, r, x, max_maps=INTEGRAL_MAP_BUDGET)
    return ContextualSwapDiagnostics(
        per_context_swap=per_context,
        weighted_swap=float(np.dot(weights, per_context)),
        linear_swap=linear_swap_regret(P, r, x, settings=settings),
        polytope_swap=poly,
        integral_linear_swap=integral,
    )


def brute_force_polytope_swap_regret(
    P: Polytope, rewards: Any, actions: Any, *, resolution: int = 50
) -> float:
    """Grid oracle: decompositions on the 1/resolution grid, all |V|^|V| vertex swaps.

    Only decompositions that recompose x^t exactly (within tolerance) are
    used, so the learner's points should lie on the grid. The number of
    plans is the product of per-round candidate counts, so vertex-valued
    rounds are free and interior points quickly hit the plan cap.
    """
    r, x = _paired(rewards, actions)
    V = P.vertex_array()
    k = V.shape[0]
    if k > 4 or r.shape[0] > 8:
        raise InvalidDimensionError("The grid oracle is limited to |V| <= 4 and T <= 8")
    grid = np.array(
        [
            np.diff(np.concatenate(([0], bars, [resolution]))) / resolution
            for bars in itertools.combinations_with_replacement(range(resolution + 1), k - 1)
        ]
    )
    payoffs = r @ V.T
    swaps = np.array(list(itertools.product(range(k), repeat=k)))

    tables = np.zeros((1, k, k))
    for t in range(r.shape[0]):
        candidates = grid[np.max(np.abs(grid @ V - x[t]), axis=1) <= 1e-9]
        if candidates.size == 0:
            raise InvalidDimensionError(f"No grid decomposition recomposes the action at round {t + 1}")
        if tables.shape[0] * candidates.shape[0] > ORACLE_MAX_PLANS:
            raise VertexBudgetExceededError(f"Grid oracle would enumerate more than {ORACLE_MAX_PLANS} decomposition plans")
        contribution = candidates[:, :, None] * payoffs[t][None, None, :]
        tables = (tables[:, None, :, :] + contribution[None, :, :, :]).reshape(-1, k, k)
    # For every candidate plan, the best swap; then the best plan for the learner.
    best = np.full(tables.shape[0], -np.inf)
    rows = np.arange(k)
    for swap in swaps:
        best = np.maximum(best, tables[:, rows, swap].sum(axis=1))
    return float(np.min(best) - np.sum(r * x))


def audit(
    P: Polytope,
    rewards: Any,
    actions: Any,
    notion: str,
    *,
    p: Optional[Any] = None,
    settings: LabSettings = DEFAULT_SETTINGS,
) -> RegretReport:
    """Dispatch one notion by name; external and swap need a simplex, contextual_external needs p."""
    if notion not in NOTIONS:
        raise ShapeError(f"Unknown regret notion {notion!r}; expected one of {', '.join(NOTIONS)}")
    if notion == "linear_swap":
        return linear_swap_regret(P, rewards, actions, settings=settings)
    if notion == "polytope_swap":
        return polytope_swap_regret(P, rewards, actions, settings=settings)
    structure = P.structure
    if notion == "contextual_external":
        if structure is None or p is None:
            raise InvalidDimensionError("Contextual external regret needs a product of simplices and context weights p")
        weights = np.asarray(p, dtype=float)
        r, x = _paired(rewards, actions)
        T, N, C = r.shape[0], structure.N, structure.C
        if weights.shape != (C,):
            raise ShapeError(f"p has shape {weights.shape}, expected ({C},)")
        scale = np.where(weights > 0, weights, 1.0)
        utilities = r.reshape(T, C, N) / scale[None, :, None]
        return contextual_external_regret(weights, utilities, x.reshape(T, C, N))
    if structure is None or structure.C != 1:
        raise InvalidDimensionError(f"{notion} regret is defined over a single simplex")
    if notion == "external":
        return external_regret(rewards, actions)
    return swap_regret(rewards, actions)


__all__ = [
    "ContextualSwapDiagnostics",
    "NOTIONS",
    "RegretReport",
    "audit",
    "brute_force_polytope_swap_regret",
    "brute_force_swap_regret",
    "contextual_external_regret",
    "contextual_swap_diagnostics",
    "external_regret",
    "integral_linear_swap_regret",
    "linear_gain",
    "linear_swap_regret",
    "polytope_swap_regret",
    "polytope_swap_value",
    "swap_gain",
    "swap_regret",
]
