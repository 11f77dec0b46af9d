"""Deterministic full-information learners.

Every learner follows the same contract: `act()` returns the point x^t it
plays this round (repeated calls return the same point) and `observe(r)`
reveals the realized reward vector r^t. The `*_step` functions are the
stateless forms: they replay a fresh learner over a reward history and
return its next action, so identical histories give identical actions.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import softmax

from .config import DEFAULT_SETTINGS, DISTRIBUTION_TOL, MEMBERSHIP_TOL, LabSettings
from .errors import (
    FixedPointNotConvergedError,
    OutOfRangeRoundError,
    PointNotInPolytopeError,
    ShapeError,
    StationarySolveError,
    UnknownComponentError,
)
from .geometry import Polytope, simplex, simplex_product

LOGGER = logging.getLogger(__name__)


def hedge_rate(n_arms: int, horizon: int) -> float:
    """Fixed-horizon learning rate sqrt(8 ln N / T)."""
    if n_arms <= 1:
        return 0.0
    return math.sqrt(8.0 * math.log(n_arms) / max(horizon, 1))


class Learner(ABC):
    polytope: Polytope
    horizon: int

    @abstractmethod
    def act(self) -> np.ndarray:
        """Point of the polytope played in the current round."""

    @abstractmethod
    def observe(self, reward: np.ndarray) -> None:
        """Reveal the realized reward vector of the current round."""

    def metadata(self) -> Dict[str, Any]:
        return {}


class HedgeLearner(Learner):
    """Multiplicative weights over N actions with weights exp(eta * cumulative reward)."""

    def __init__(self, n_actions: int, horizon: int) -> None:
        self.polytope = simplex(n_actions)
        self.horizon = horizon
        self.eta = hedge_rate(n_actions, horizon)
        self.cumulative = np.zeros(n_actions)

    def distribution(self) -> np.ndarray:
        return softmax(self.eta * self.cumulative)

    def act(self) -> np.ndarray:
        return self.distribution()

    def observe(self, reward: np.ndarray) -> None:
        self.cumulative += reward


def stationary_distribution(
    Q: np.ndarray,
    *,
    initial: Optional[np.ndarray] = None,
    settings: LabSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Distribution p with p = pQ for a row-stochastic Q.

    Power iteration on the lazy chain (Q + I) / 2 until ||pQ - p|| is below
    the tolerance; chains that do not mix in time are smoothed towards
    uniform and solved directly.
    """
    n = Q.shape[0]
    p = np.full(n, 1.0 / n) if initial is None else np.array(initial, dtype=float)
    for _ in range(settings.stationary_max_iters):
        pq = p @ Q
        if np.max(np.abs(pq - p)) < settings.stationary_tol:
            return p
        p = 0.5 * (p + pq)
        p /= p.sum()

    LOGGER.debug("Power iteration did not reach %.1e; retrying with uniform smoothing", settings.stationary_tol)
    eps = settings.stationary_smoothing
    smoothed = (1.0 - eps) * Q + eps / n
    system = np.vstack([smoothed.T - np.eye(n), np.ones((1, n))])
    rhs = np.append(np.zeros(n), 1.0)
    p, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    for _ in range(100):
        pq = p @ smoothed
        if np.max(np.abs(pq - p)) < settings.stationary_tol:
            break
        p = pq / pq.sum()
    residual = float(np.max(np.abs(p @ smoothed - p)))
    if residual > settings.stationary_fail_tol:
        raise StationarySolveError(f"Stationary distribution residual {residual:.3e} exceeds {settings.stationary_fail_tol:.0e}")
    return p


class BlumMansourLearner(Learner):
    """Swap-regret learner built from one Hedge instance per action.

    Row j of Q is instance j's distribution; the round distribution solves
    p = pQ and instance j is credited p_j * r^t.
    """

    def __init__(self, n_actions: int, horizon: int, settings: LabSettings = DEFAULT_SETTINGS) -> None:
        self.polytope = simplex(n_actions)
        self.horizon = horizon
        self.settings = settings
        self.eta = hedge_rate(n_actions, horizon)
        self.cumulative = np.zeros((n_actions, n_actions))
        self._current: Optional[np.ndarray] = None
        self._previous: Optional[np.ndarray] = None

    def rows(self) -> np.ndarray:
        return softmax(self.eta * self.cumulative, axis=1)

    def act(self) -> np.ndarray:
        if self._current is None:
            self._current = stationary_distribution(self.rows(), initial=self._previous, settings=self.settings)
        return self._current

    def observe(self, reward: np.ndarray) -> None:
        p = self.act()
        self.cumulative += np.outer(p, reward)
        self._previous, self._current = p, None


class VertexLiftedLearner(Learner):
    """Blum-Mansour over one arm per vertex; plays the matching convex combination."""

    def __init__(self, polytope: Polytope, horizon: int, settings: LabSettings = DEFAULT_SETTINGS) -> None:
        self.polytope = polytope
        self.horizon = horizon
        self.vertices = polytope.vertex_array()
        self.inner = BlumMansourLearner(self.vertices.shape[0], horizon, settings)
        self.inner_actions: List[np.ndarray] = []
        self.inner_rewards: List[np.ndarray] = []

    def act(self) -> np.ndarray:
        return self.inner.act() @ self.vertices

    def observe(self, reward: np.ndarray) -> None:
        arm_rewards = self.vertices @ reward
        self.inner_actions.append(self.inner.act().copy())
        self.inner_rewards.append(arm_rewards)
        self.inner.observe(arm_rewards)

    def inner_history(self) -> tuple[np.ndarray, np.ndarray]:
        """(arm rewards, arm distributions) seen by the inner swap-regret learner."""
        return np.array(self.inner_rewards), np.array(self.inner_actions)


def _context_weights(p: Optional[Sequence[float]], C: int) -> np.ndarray:
    weights = np.full(C, 1.0 / C) if p is None else np.asarray(p, dtype=float)
    if weights.shape != (C,):
        raise ShapeError(f"Context probabilities have shape {weights.shape}, expected ({C},)")
    return weights


def _unscale(reward: np.ndarray, p: np.ndarray, N: int) -> np.ndarray:
    """Per-context utilities u_L(alpha, ., c) from a p_c-scaled reward vector."""
    blocks = np.asarray(reward, dtype=float).reshape(p.shape[0], N)
    safe = np.where(p > 0, p, 1.0)
    return np.where(p[:, None] > 0, blocks / safe[:, None], 0.0)


INNER_LEARNERS = ("blum_mansour", "hedge")


class PerContextLearner(Learner):
    """One independent learner per context, each fed that context's utilities."""

    def __init__(
        self,
        N: int,
        C: int,
        horizon: int,
        *,
        p: Optional[Sequence[float]] = None,
        inner: str = "blum_mansour",
        settings: LabSettings = DEFAULT_SETTINGS,
    ) -> None:
        if inner not in INNER_LEARNERS:
            raise UnknownComponentError(f"Unknown inner learner {inner!r}; expected one of {', '.join(INNER_LEARNERS)}")
        self.polytope = simplex_product(N, C, lazy=True)
        self.horizon = horizon
        self.N, self.C = N, C
        self.p = _context_weights(p, C)
        self.inner_name = inner
        self.instances: List[Learner] = [
            BlumMansourLearner(N, horizon, settings) if inner == "blum_mansour" else HedgeLearner(N, horizon)
            for _ in range(C)
        ]
        self.context_actions: List[np.ndarray] = []
        self.context_rewards: List[np.ndarray] = []

    def strategy(self) -> np.ndarray:
        return np.vstack([instance.act() for instance in self.instances])

    def act(self) -> np.ndarray:
        return self.strategy().reshape(-1)

    def observe(self, reward: np.ndarray) -> None:
        utilities = _unscale(reward, self.p, self.N)
        self.context_actions.append(self.strategy())
        self.context_rewards.append(utilities)
        for instance, row in zip(self.instances, utilities):
            instance.observe(row)

    def metadata(self) -> Dict[str, Any]:
        return {"inner": self.inner_name}


@dataclass(frozen=True, eq=False)
class FixedPointProblem:
    """gamma[c, j] is a distribution over N + C arms: N actions, then C contexts."""

    gamma: np.ndarray

    def __post_init__(self) -> None:
        gamma = np.array(self.gamma, dtype=float)
        if gamma.ndim != 3 or gamma.shape[2] != gamma.shape[1] + gamma.shape[0]:
            raise ShapeError(f"gamma must have shape (C, N, N + C), got {gamma.shape}")
        if np.any(gamma < 0) or np.max(np.abs(gamma.sum(axis=2) - 1.0)) > DISTRIBUTION_TOL:
            raise ShapeError("Every gamma row must be a probability distribution")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @property
    def C(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def N(self) -> int:
        return int(self.gamma.shape[1])


@dataclass
class FixedPointStats:
    beta: np.ndarray
    plain_iterations: int
    damped_iterations: int
    residual: float
    max_row_error: float


def fixed_point_map(prob: FixedPointProblem, beta: np.ndarray) -> np.ndarray:
    """beta(c)_j <- sum_j' beta(c)_j' (gamma[c,j',j] + sum_c' gamma[c,j',N+c'] beta(c')_j)."""
    N = prob.N
    direct = np.einsum("cj,cjk->ck", beta, prob.gamma[:, :, :N])
    redirect = np.einsum("cj,cjd->cd", beta, prob.gamma[:, :, N:]) @ beta
    return direct + redirect


def fixed_point_iterate(
    prob: FixedPointProblem,
    tol: float = DEFAULT_SETTINGS.fixed_point_tol,
    max_iters: int = DEFAULT_SETTINGS.fixed_point_max_iters,
    *,
    initial: Optional[np.ndarray] = None,
) -> FixedPointStats:
    """Iterate the quadratic map from uniform, then damped, until the residual is below tol."""
    beta = np.full((prob.C, prob.N), 1.0 / prob.N) if initial is None else np.array(initial, dtype=float)
    max_row_error = float(np.max(np.abs(beta.sum(axis=1) - 1.0)))
    plain = damped = 0
    residual = math.inf
    for phase in ("plain", "damped"):
        for _ in range(max_iters):
            image = fixed_point_map(prob, beta)
            residual = float(np.max(np.abs(image - beta)))
            if residual < tol:
                LOGGER.debug("fixed point: %s plain + %s damped iterations, residual %.2e", plain, damped, residual)
                return FixedPointStats(beta, plain, damped, residual, max_row_error)
            nxt = image if phase == "plain" else 0.5 * (beta + image)
            max_row_error = max(max_row_error, float(np.max(np.abs(nxt.sum(axis=1) - 1.0))))
            beta = nxt / nxt.sum(axis=1, keepdims=True)
            if phase == "plain":
                plain += 1
            else:
                damped += 1
        if phase == "plain":
            LOGGER.info("fixed point: no convergence after %s plain iterations; switching to damping", max_iters)
    raise FixedPointNotConvergedError(
        f"Fixed-point iteration stopped at residual {residual:.3e} after {plain} plain and {damped} damped steps"
    )


def fixed_point_solve(
    prob: FixedPointProblem,
    tol: float = DEFAULT_SETTINGS.fixed_point_tol,
    max_iters: int = DEFAULT_SETTINGS.fixed_point_max_iters,
) -> np.ndarray:
    """Row-stochastic C x N matrix beta with ||beta - Phi(beta)|| < tol."""
    return fixed_point_iterate(prob, tol, max_iters).beta


class ContextSwapLearner(Learner):
    """N*C Hedge instances over N + C arms, coupled through a fixed point each round.

    Arm j' of instance (c, j) swaps action j to j' in context c; arm N + c'
    plays context c' strategy instead.
    """

    def __init__(
        self,
        N: int,
        C: int,
        horizon: int,
        *,
        p: Optional[Sequence[float]] = None,
        tol: float = DEFAULT_SETTINGS.fixed_point_tol,
        max_iters: int = DEFAULT_SETTINGS.fixed_point_max_iters,
    ) -> None:
        self.polytope = simplex_product(N, C, lazy=True)
        self.horizon = horizon
        self.N, self.C = N, C
        self.p = _context_weights(p, C)
        self.tol, self.max_iters = tol, max_iters
        self.eta = hedge_rate(N + C, horizon)
        self.cumulative = np.zeros((C, N, N + C))
        self._beta: Optional[np.ndarray] = None
        self.fixed_point_log: List[tuple[int, int, float]] = []

    def gamma(self) -> np.ndarray:
        return softmax(self.eta * self.cumulative, axis=2)

    def strategy(self) -> np.ndarray:
        if self._beta is None:
            stats = fixed_point_iterate(FixedPointProblem(self.gamma()), self.tol, self.max_iters)
            self.fixed_point_log.append((stats.plain_iterations, stats.damped_iterations, stats.residual))
            self._beta = stats.beta
        return self._beta

    def act(self) -> np.ndarray:
        return self.strategy().reshape(-1)

    def observe(self, reward: np.ndarray) -> None:
        beta = self.strategy()
        utilities = _unscale(reward, self.p, self.N)
        # base[c] = (u_L(alpha, j', c) for j', then u_L(alpha, beta(c'), c) for c').
        base = np.concatenate([utilities, utilities @ beta.T], axis=1)
        self.cumulative += beta[:, :, None] * base[:, None, :]
        self._beta = None

    def metadata(self) -> Dict[str, Any]:
        if not self.fixed_point_log:
            return {}
        plain = np.array([entry[0] for entry in self.fixed_point_log])
        damped = np.array([entry[1] for entry in self.fixed_point_log])
        return {
            "fixed_point_rounds": int(plain.size),
            "fixed_point_plain_mean": float(plain.mean()),
            "fixed_point_plain_max": int(plain.max()),
            "fixed_point_damped_rounds": int(np.count_nonzero(damped)),
            "fixed_point_max_residual": float(max(entry[2] for entry in self.fixed_point_log)),
        }


class ScriptedLearner(Learner):
    """Replays a fixed trajectory, ignoring rewards."""

    def __init__(self, polytope: Polytope, trajectory: Any) -> None:
        self.polytope = polytope
        self.trajectory = np.array(trajectory, dtype=float)
        if self.trajectory.ndim != 2 or self.trajectory.shape[1] != polytope.dim:
            raise ShapeError(f"Trajectory has shape {self.trajectory.shape}, expected (T, {polytope.dim})")
        for t, point in enumerate(self.trajectory, start=1):
            if not polytope.contains(point, MEMBERSHIP_TOL):
                raise PointNotInPolytopeError(f"Scripted point at round {t} lies outside P")
        self.horizon = int(self.trajectory.shape[0])
        self.round = 1

    def act(self) -> np.ndarray:
        return scripted_step(self.trajectory, self.round)

    def observe(self, reward: np.ndarray) -> None:
        self.round += 1


def scripted_step(trajectory: Any, t: int) -> np.ndarray:
    """trajectory[t] for 1-based round t."""
    trajectory = np.asarray(trajectory, dtype=float)
    if not 1 <= t <= trajectory.shape[0]:
        raise OutOfRangeRoundError(f"Round {t} is outside the scripted trajectory of length {trajectory.shape[0]}")
    return trajectory[t - 1]


def _replay(learner: Learner, history: Sequence[Any]) -> np.ndarray:
    for reward in history:
        learner.act()
        learner.observe(np.asarray(reward, dtype=float))
    return learner.act()


def hedge_step(history: Sequence[Any], N: int, T: int) -> np.ndarray:
    return _replay(HedgeLearner(N, T), history)


def blum_mansour_step(history: Sequence[Any], N: int, T: int) -> np.ndarray:
    return _replay(BlumMansourLearner(N, T), history)


def vertex_lifted_step(history: Sequence[Any], P: Polytope, T: int) -> np.ndarray:
    return _replay(VertexLiftedLearner(P, T), history)


def per_context_step(
    history: Sequence[Any], N: int, C: int, T: int, *, p: Optional[Sequence[float]] = None, inner: str = "blum_mansour"
) -> np.ndarray:
    learner = PerContextLearner(N, C, T, p=p, inner=inner)
    return _replay(learner, history).reshape(C, N)


def context_swap_step(
    history: Sequence[Any], N: int, C: int, T: int, *, p: Optional[Sequence[float]] = None
) -> np.ndarray:
    learner = ContextSwapLearner(N, C, T, p=p)
    return _replay(learner, history).reshape(C, N)


__all__ = [
    "BlumMansourLearner",
    "ContextSwapLearner",
    "FixedPointProblem",
    "FixedPointStats",
    "HedgeLearner",
    "INNER_LEARNERS",
    "Learner",
    "PerContextLearner",
    "ScriptedLearner",
    "VertexLiftedLearner",
    "blum_mansour_step",
    "context_swap_step",
    "fixed_point_iterate",
    "fixed_point_map",
    "fixed_point_solve",
    "hedge_rate",
    "hedge_step",
    "per_context_step",
    "scripted_step",
    "stationary_distribution",
    "vertex_lifted_step",
]
