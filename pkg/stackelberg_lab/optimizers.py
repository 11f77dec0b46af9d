"""Optimizer strategies: static commitment, perturbed Stackelberg, and dynamic exploits.

An optimizer maps (round t, learner history) to mixed weights over the Q
vertices of the game. All of them are read-only after construction.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .config import DEFAULT_SETTINGS, DISTRIBUTION_TOL, LabSettings
from .equilibria import StackelbergSolution, margin_lp, stackelberg_polytope
from .errors import BadHorizonError, DegenerateGameError, OutOfRangeRoundError, ShapeError
from .games import PolytopeGame

LOGGER = logging.getLogger(__name__)


def _as_weights(values: Any) -> np.ndarray:
    weights = np.array(values, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise ShapeError(f"Optimizer weights must be a non-empty vector, got shape {weights.shape}")
    if np.any(weights < -DISTRIBUTION_TOL) or abs(weights.sum() - 1.0) > DISTRIBUTION_TOL * weights.size:
        raise ShapeError("Optimizer weights must form a probability distribution")
    weights = np.clip(weights, 0.0, None)
    weights.setflags(write=False)
    return weights


class Optimizer(ABC):
    n_q: int

    @abstractmethod
    def act(self, t: int, history: Sequence[np.ndarray]) -> np.ndarray:
        """Mixed weights over Q vertices for 1-based round t."""

    def describe(self) -> Dict[str, Any]:
        return {"optimizer": type(self).__name__}


class StaticOptimizer(Optimizer):
    def __init__(self, q_weights: Any) -> None:
        self.weights = _as_weights(q_weights)
        self.n_q = int(self.weights.size)

    def act(self, t: int, history: Sequence[np.ndarray]) -> np.ndarray:
        return self.weights

    def describe(self) -> Dict[str, Any]:
        return {"optimizer": "static", "weights": self.weights.tolist()}


def static_strategy(q_weights: Any) -> StaticOptimizer:
    return StaticOptimizer(q_weights)


def hedge_regret_bound(n_vertices: int, T: int) -> float:
    """sqrt(T ln |V| / 2), the fixed-horizon Hedge guarantee over the vertices."""
    return math.sqrt(T * math.log(max(n_vertices, 2)) / 2.0)


class PerturbedStackelberg(StaticOptimizer):
    """(1 - eps) alpha + eps alpha_v with eps = sqrt(R / T)."""

    def __init__(
        self,
        solution: StackelbergSolution,
        vertex: int,
        margin: float,
        epsilon: float,
        regret_bound: float,
        margin_strategy: np.ndarray,
    ) -> None:
        self.solution = solution
        self.vertex = vertex
        self.margin = margin
        self.epsilon = epsilon
        self.regret_bound = regret_bound
        self.margin_strategy = margin_strategy
        self.base_strategy = solution.candidate_strategies[vertex]
        super().__init__((1.0 - epsilon) * self.base_strategy + epsilon * margin_strategy)

    def describe(self) -> Dict[str, Any]:
        return {
            "optimizer": "perturbed_stackelberg",
            "vertex": self.vertex,
            "margin": self.margin,
            "epsilon": self.epsilon,
            "regret_bound": self.regret_bound,
            "weights": self.weights.tolist(),
        }


def perturbed_stackelberg(
    G: PolytopeGame,
    regret_bound: Optional[float] = None,
    T: int = 1,
    *,
    settings: LabSettings = DEFAULT_SETTINGS,
) -> PerturbedStackelberg:
    """Commit to a mix of the Stackelberg strategy and a strict-best-response strategy.

    Among the optimal response vertices the one with the largest margin is
    used; its margin delta is reported with the strategy.
    """
    if T < 1:
        raise BadHorizonError(f"T must be positive, got {T}")
    solution = stackelberg_polytope(G, settings=settings)
    best_vertex, best_margin, best_strategy = solution.response, -math.inf, None
    for vertex in solution.candidates:
        margin, strategy = margin_lp(G, vertex, settings=settings)
        if margin > best_margin + settings.lp_tol:
            best_vertex, best_margin, best_strategy = vertex, margin, strategy
    if best_strategy is None or best_margin <= settings.degenerate_margin:
        raise DegenerateGameError(
            f"No optimal response vertex can be made a strict best response (margin {best_margin:.3e})"
        )
    if regret_bound is None:
        regret_bound = hedge_regret_bound(G.P.n_vertices, T)
    if regret_bound < 0:
        raise ShapeError(f"Regret bound must be nonnegative, got {regret_bound}")
    epsilon = min(1.0, math.sqrt(regret_bound / T))
    LOGGER.info(
        "perturbed_stackelberg: vertex %s, margin %.6g, epsilon %.6g (R = %.6g, T = %s)",
        best_vertex,
        best_margin,
        epsilon,
        regret_bound,
        T,
    )
    return PerturbedStackelberg(
        solution=solution,
        vertex=best_vertex,
        margin=best_margin,
        epsilon=epsilon,
        regret_bound=float(regret_bound),
        margin_strategy=best_strategy,
    )


class ReplayOptimizer(Optimizer):
    """Plays schedule[t] in round t whatever the learner does."""

    def __init__(self, schedule: Any) -> None:
        rows = np.array(schedule, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ShapeError(f"Schedule must be a (T, |Q|) array, got shape {rows.shape}")
        self.schedule = np.vstack([_as_weights(row) for row in rows])
        self.n_q = int(self.schedule.shape[1])

    def act(self, t: int, history: Sequence[np.ndarray]) -> np.ndarray:
        if not 1 <= t <= self.schedule.shape[0]:
            raise OutOfRangeRoundError(f"Round {t} is outside the replay schedule of length {self.schedule.shape[0]}")
        return self.schedule[t - 1]

    def describe(self) -> Dict[str, Any]:
        return {"optimizer": "replay", "rounds": int(self.schedule.shape[0])}


def replay_exploit(schedule: Any) -> ReplayOptimizer:
    return ReplayOptimizer(schedule)


class TwoPhasePriceOptimizer(Optimizer):
    """Price 0 for the first half of the horizon, price 1 for the second."""

    n_q = 2

    def __init__(self, T: int) -> None:
        if T < 2 or T % 2:
            raise BadHorizonError(f"two_phase_price needs an even horizon, got T={T}")
        self.T = T

    def act(self, t: int, history: Sequence[np.ndarray]) -> np.ndarray:
        if not 1 <= t <= self.T:
            raise OutOfRangeRoundError(f"Round {t} is outside the horizon {self.T}")
        return np.array([1.0, 0.0]) if t <= self.T // 2 else np.array([0.0, 1.0])

    def describe(self) -> Dict[str, Any]:
        return {"optimizer": "two_phase_price", "T": self.T}


def two_phase_price(T: int) -> TwoPhasePriceOptimizer:
    return TwoPhasePriceOptimizer(T)


def exact_replay_total(S: Any, schedule: Sequence[Sequence[Fraction]], actions: Any) -> Fraction:
    """sum_t sum_i w^t_i <s_i, x^t> in rational arithmetic.

    Float entries of S and of the learner actions are converted exactly, so
    the only rounding is whatever produced those floats.
    """
    rows = [[Fraction(float(v)) for v in row] for row in np.asarray(S, dtype=float)]
    points = np.asarray(actions, dtype=float)
    if len(schedule) != points.shape[0]:
        raise ShapeError(f"Schedule has {len(schedule)} rounds, actions have {points.shape[0]}")
    total = Fraction(0)
    for weights, point in zip(schedule, points):
        x = [Fraction(float(v)) for v in point]
        for weight, row in zip(weights, rows):
            if weight:
                total += weight * sum(s * xi for s, xi in zip(row, x) if xi)
    return total


__all__ = [
    "Optimizer",
    "PerturbedStackelberg",
    "ReplayOptimizer",
    "StaticOptimizer",
    "TwoPhasePriceOptimizer",
    "exact_replay_total",
    "hedge_regret_bound",
    "perturbed_stackelberg",
    "replay_exploit",
    "static_strategy",
    "two_phase_price",
]
