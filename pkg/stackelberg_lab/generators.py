"""Constructors for every named game and learning instance.

Covers the adversarial constructions that turn realized swap regret (over a
simplex) or linear swap regret (over a general polytope) into optimizer
utility, the separation instance and game over Delta([2])^2, the selling
game, and the dominating-set hardness family. Random generators used by the
property suites also live here; they are the only consumers of a seed.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import HYPERCUBE_MAX_DIM, MEMBERSHIP_TOL, NUMERICALLY_ZERO
from .errors import (
    BadGraphError,
    BadHorizonError,
    InvalidDimensionError,
    PointNotInPolytopeError,
    RewardOutOfRangeError,
    ShapeError,
    VertexBudgetExceededError,
)
from .games import BayesianGame, PolytopeGame, StandardGame
from .geometry import (
    Polytope,
    contraction_constraints,
    hypercube_decompose,
    sign_patterns,
    simplex_product,
)
from .learners import ScriptedLearner

LOGGER = logging.getLogger(__name__)

LEMMA1_MAX_ACTIONS = 10

# Optimizer reward vectors of the separation game, blocks (context 1; context 2).
SEPARATION_S = np.array(
    [
        [0.00, 0.26, 0.60, 0.21],
        [0.05, 0.17, 0.45, 0.68],
        [0.16, 0.25, 0.33, 0.20],
        [0.16, 0.68, 0.22, 0.44],
    ]
)
SEPARATION_VALUE = 0.74
SEPARATION_SCHEDULE_AVERAGE = 0.7575


@dataclass(frozen=True, eq=False)
class LearningInstance:
    P: Polytope
    rewards: np.ndarray

    def __post_init__(self) -> None:
        rewards = np.array(self.rewards, dtype=float)
        if rewards.ndim != 2 or rewards.shape[1] != self.P.dim:
            raise ShapeError(f"Rewards have shape {rewards.shape}, expected (T, {self.P.dim})")
        if rewards.shape[0] < 1:
            raise BadHorizonError("A learning instance needs T >= 1 rounds")
        if np.max(np.abs(rewards)) > 1.0 + MEMBERSHIP_TOL:
            raise RewardOutOfRangeError("Reward vectors must lie in [-1, 1]^d")
        rewards.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)

    @property
    def T(self) -> int:
        return int(self.rewards.shape[0])


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..V-1."""

    V: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self) -> None:
        if self.V < 1:
            raise BadGraphError(f"A graph needs at least one vertex, got V={self.V}")
        normalised = set()
        for u, v in self.edges:
            if u == v:
                raise BadGraphError(f"Self-loop at vertex {u}")
            if not (0 <= u < self.V and 0 <= v < self.V):
                raise BadGraphError(f"Edge ({u}, {v}) references a vertex outside 0..{self.V - 1}")
            normalised.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalised))

    @classmethod
    def from_edges(cls, V: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        return cls(V=V, edges=frozenset((int(u), int(v)) for u, v in edges))

    @classmethod
    def parse(cls, text: str) -> "Graph":
        """Read the edge-list format: first line V, then one `u v` pair per line (1-based)."""
        lines = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not lines:
            raise BadGraphError("Empty graph description")
        V = int(lines[0])
        edges = []
        for line in lines[1:]:
            parts = line.split()
            if len(parts) != 2:
                raise BadGraphError(f"Malformed edge line {line!r}")
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
        return cls.from_edges(V, edges)

    def to_text(self) -> str:
        rows = [str(self.V)] + [f"{u + 1} {v + 1}" for u, v in sorted(self.edges)]
        return "\n".join(rows) + "\n"

    def neighbors(self, v: int) -> List[int]:
        return sorted({b if a == v else a for a, b in self.edges if v in (a, b)})

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.V)), default=0)


def single_edge() -> Graph:
    return Graph.from_edges(2, [(0, 1)])


def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def path_graph(V: int) -> Graph:
    return Graph.from_edges(V, [(v, v + 1) for v in range(V - 1)])


def petersen_graph() -> Graph:
    outer = [(v, (v + 1) % 5) for v in range(5)]
    spokes = [(v, v + 5) for v in range(5)]
    inner = [(5 + v, 5 + (v + 2) % 5) for v in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


def small_graphs(V: int, max_degree: int = 3) -> List[Graph]:
    """One representative per isomorphism class of graphs on V <= 5 vertices."""
    if V > 5:
        raise BadGraphError("Isomorphism-class enumeration is limited to V <= 5")
    pairs = list(itertools.combinations(range(V), 2))
    perms = list(itertools.permutations(range(V)))
    seen = set()
    graphs = []
    for mask in range(2 ** len(pairs)):
        edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
        canonical = min(
            tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in edges)) for perm in perms
        )
        if canonical in seen:
            continue
        seen.add(canonical)
        graph = Graph.from_edges(V, edges)
        if graph.max_degree <= max_degree:
            graphs.append(graph)
    return graphs


def _check_simplex_instance(instance: LearningInstance) -> int:
    structure = instance.P.structure
    if structure is None or structure.C != 1:
        raise InvalidDimensionError("This construction needs a learning instance over a simplex")
    return structure.N


def _check_actions(P: Polytope, actions: Any, T: int) -> np.ndarray:
    arr = np.asarray(actions, dtype=float)
    if arr.shape != (T, P.dim):
        raise ShapeError(f"Actions have shape {arr.shape}, expected ({T}, {P.dim})")
    for t, point in enumerate(arr, start=1):
        if not P.contains(point):
            raise PointNotInPolytopeError(f"Learner action at round {t} lies outside P")
    return arr


def lemma1_game(
    instance: LearningInstance, actions: Any, pi: Sequence[int]
) -> Tuple[StandardGame, np.ndarray]:
    """Game with M = 2^N sign-pattern actions that pays the optimizer half the swap gain.

    u_L(i, j) = s^i_j and u_O(i, j) = (s^i_{pi(j)} - s^i_j) / 2. Playing the
    product-form decomposition of r^t in round t shows the learner exactly r^t.
    """
    N = _check_simplex_instance(instance)
    if N > LEMMA1_MAX_ACTIONS:
        raise VertexBudgetExceededError(f"N = {N} gives 2^N optimizer actions; the limit is N <= {LEMMA1_MAX_ACTIONS}")
    _check_actions(instance.P, actions, instance.T)
    mapping = np.asarray(pi, dtype=int)
    if mapping.shape != (N,) or np.any(mapping < 0) or np.any(mapping >= N):
        raise ShapeError(f"Swap function must map [N] -> [N] with N = {N}")
    patterns = sign_patterns(N).astype(float)
    u_L = patterns
    u_O = (patterns[:, mapping] - patterns) / 2.0
    schedule = np.vstack([hypercube_decompose(r).weights for r in instance.rewards])
    return StandardGame(u_O=u_O, u_L=u_L), schedule


def exact_schedule(instance: LearningInstance) -> List[List[Fraction]]:
    """The product-form schedule in rational arithmetic, one row per round."""
    return [list(hypercube_decompose([Fraction(float(v)) for v in r], exact=True).weights) for r in instance.rewards]


def contraction_scale(M_star: Any) -> float:
    """lambda = induced infinity-norm of (M_star - I)^T, i.e. the largest column abs-sum."""
    M = np.asarray(M_star, dtype=float)
    return float(np.max(np.sum(np.abs(M - np.eye(M.shape[0])), axis=0)))


def lemma_linear_game(
    instance: LearningInstance, actions: Any, M_star: Any
) -> Tuple[PolytopeGame, np.ndarray]:
    """Polytope game paying the optimizer R / (lambda + 1) for linear swap regret R under M_star.

    Q is the image of the hypercube y -> (y, (M_star - I)^T y / (lambda + 1)),
    stored as the 2^d images of the sign patterns.
    """
    P = instance.P
    d = P.dim
    if d > HYPERCUBE_MAX_DIM:
        raise VertexBudgetExceededError(f"d = {d} gives 2^d Q vertices; the limit is d <= {HYPERCUBE_MAX_DIM}")
    _check_actions(P, actions, instance.T)
    M = np.asarray(M_star, dtype=float)
    if M.shape != (d, d):
        raise ShapeError(f"Contraction matrix has shape {M.shape}, expected ({d}, {d})")
    system = contraction_constraints(P)
    if not system.is_feasible(M, tol=NUMERICALLY_ZERO):
        raise PointNotInPolytopeError(f"M_star is not a contraction of P (violation {system.violation(M):.3e})")
    lam = contraction_scale(M)
    patterns = sign_patterns(d).astype(float)
    S = np.clip(patterns @ (M - np.eye(d)) / (lam + 1.0), -1.0, 1.0)
    schedule = np.vstack([hypercube_decompose(r).weights for r in instance.rewards])
    LOGGER.debug("lemma_linear_game: d=%s, lambda=%.6g, |Q|=%s", d, lam, patterns.shape[0])
    return PolytopeGame(P=P, R=patterns, S=S), schedule


def _quarters(T: int) -> np.ndarray:
    if T < 4 or T % 4:
        raise BadHorizonError(f"T must be a positive multiple of 4, got {T}")
    return np.repeat(np.arange(4), T // 4)


def separation_instance(T: int) -> Tuple[LearningInstance, np.ndarray]:
    """Rewards v11, v12, v21, v11 by quarter; the learner walks v11, v12, v21, v22."""
    quarter = _quarters(T)
    P = simplex_product(2, 2)
    V = P.vertex_array()
    reward_vertex = np.array([0, 1, 2, 0])
    instance = LearningInstance(P=P, rewards=V[reward_vertex[quarter]])
    return instance, V[quarter].copy()


def separation_game(T: int) -> Tuple[PolytopeGame, np.ndarray, ScriptedLearner]:
    """The separation game, its quarter-by-quarter schedule, and the scripted learner."""
    quarter = _quarters(T)
    instance, trajectory = separation_instance(T)
    V = instance.P.vertex_array()
    game = PolytopeGame(P=instance.P, R=V[[0, 1, 2, 0]], S=SEPARATION_S)
    schedule = np.eye(4)[quarter]
    return game, schedule, ScriptedLearner(instance.P, trajectory)


def selling_game() -> BayesianGame:
    """Price i in {0, 1}, buy j in {0, 1}, context c in {1, 2} with equal probability.

    u_L(i, j, c) = (c/4 - i) j and u_O(i, j, c) = i j.
    """
    u_L = np.zeros((2, 2, 2))
    u_O = np.zeros((2, 2, 2))
    for i, j, c in itertools.product(range(2), range(2), range(2)):
        u_L[i, j, c] = ((c + 1) / 4 - i) * j
        u_O[i, j, c] = i * j
    return BayesianGame(p=np.full(2, 0.5), u_O=u_O, u_L=u_L)


def dominating_set_game(H: Graph, *, type_bonus: bool = False) -> BayesianGame:
    """Bayesian game whose Stackelberg value is (V - D) / (4 V^2).

    Optimizer actions are the vertices plus an abstaining action (last);
    learner actions are 0..3 (claim a payment from nbr(v, j)) plus the opt-out
    action (last); contexts are v = 0..V-1 followed by their barred copies.
    With `type_bonus` the barred-context optimizer payoff keeps its constant
    1/V, which shifts the value by exactly 1/(2V).
    """
    if H.max_degree > 3:
        raise BadGraphError(f"Graph has maximum degree {H.max_degree}; at most 3 is supported")
    V = H.V
    M, N, C = V + 1, 5, 2 * V
    opt_out = N - 1
    u_L = np.zeros((M, N, C))
    u_O = np.zeros((M, N, C))
    for v in range(V):
        nbr = [v] + H.neighbors(v)
        for j in range(4):
            target = nbr[j] if j < len(nbr) else -1
            for i in range(M):
                hit = 1.0 if (i < V and i == target) else 0.0
                u_L[i, j, v] = hit - 1.0 / (2 * V)
                u_O[i, j, v] = (1.0 / V if target != -1 else 0.0) - hit
        barred = V + v
        for i in range(M):
            hit = 1.0 if i == v else 0.0
            u_L[i, opt_out, barred] = hit
            u_O[i, opt_out, barred] = (1.0 / V if type_bonus else 0.0) - hit
            for j in range(4):
                u_L[i, j, barred] = -1.0 / (2 * V)
    return BayesianGame(p=np.full(C, 1.0 / C), u_O=u_O, u_L=u_L)


def cycling_instance(
    P: Polytope,
    T: int,
    rng: np.random.Generator,
    *,
    block_range: Tuple[int, int] = (20, 120),
    noise: float = 0.25,
) -> LearningInstance:
    """Adversarial instance whose best vertex rotates block by block.

    Each block favours the next vertex of P (+1 on its support, -1 elsewhere)
    with uniform noise, so lagging learners accumulate swap regret.
    """
    if T < 1:
        raise BadHorizonError(f"T must be positive, got {T}")
    V = P.vertex_array()
    order = rng.permutation(V.shape[0])
    rewards = np.empty((T, P.dim))
    t, block = 0, 0
    while t < T:
        length = int(rng.integers(block_range[0], block_range[1] + 1))
        hot = V[order[block % len(order)]]
        stop = min(T, t + length)
        base = 2.0 * hot - 1.0
        rewards[t:stop] = np.clip(base + rng.uniform(-noise, noise, size=(stop - t, P.dim)), -1.0, 1.0)
        t, block = stop, block + 1
    return LearningInstance(P=P, rewards=rewards)


def random_standard_game(M: int, N: int, rng: np.random.Generator) -> StandardGame:
    return StandardGame(u_O=rng.uniform(-1, 1, size=(M, N)), u_L=rng.uniform(-1, 1, size=(M, N)))


def random_bayesian_game(M: int, N: int, C: int, rng: np.random.Generator) -> BayesianGame:
    p = rng.dirichlet(np.ones(C))
    return BayesianGame(p=p, u_O=rng.uniform(-1, 1, size=(M, N, C)), u_L=rng.uniform(-1, 1, size=(M, N, C)))


def random_polytope_game(P: Polytope, n_q: int, rng: np.random.Generator) -> PolytopeGame:
    return PolytopeGame(
        P=P,
        R=rng.uniform(-1, 1, size=(n_q, P.dim)),
        S=rng.uniform(-1, 1, size=(n_q, P.dim)),
    )


__all__ = [
    "Graph",
    "LearningInstance",
    "SEPARATION_S",
    "SEPARATION_SCHEDULE_AVERAGE",
    "SEPARATION_VALUE",
    "contraction_scale",
    "cycling_instance",
    "dominating_set_game",
    "exact_schedule",
    "lemma1_game",
    "lemma_linear_game",
    "path_graph",
    "petersen_graph",
    "random_bayesian_game",
    "random_polytope_game",
    "random_standard_game",
    "selling_game",
    "separation_game",
    "separation_instance",
    "single_edge",
    "small_graphs",
    "triangle",
]
