"""Polytopes, vertex decompositions, vertex swaps and linear contractions.

A polytope is carried both as an explicit vertex list and as a facet
description (a.x <= b plus equalities a.x = b). Products of simplices keep
their (N, C) structure so callers can work blockwise: coordinate c*N + j is
the weight on action j in context c, and vertices are enumerated
lexicographically in (choice for context 1, ..., choice for context C).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .config import DISTRIBUTION_TOL, MEMBERSHIP_TOL, VERTEX_BUDGET
from .errors import (
    InvalidDimensionError,
    PointNotInPolytopeError,
    RewardOutOfRangeError,
    ShapeError,
    VertexBudgetExceededError,
)
from .lp import solve_lp

LOGGER = logging.getLogger(__name__)

_ZERO_WEIGHT = 1e-13


@dataclass(frozen=True)
class ProductOfSimplices:
    N: int
    C: int


def _frozen(array: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(array, dtype=float)
    if ndim == 2 and arr.size == 0:
        arr = arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Polytope:
    """Learner action set P as vertices plus a facet description.

    `vertices` is None only for simplex products whose vertex count exceeds
    the budget; anything that needs explicit vertices then fails fast.
    """

    dim: int
    vertices: Optional[np.ndarray]
    facet_normals: np.ndarray
    facet_offsets: np.ndarray
    eq_normals: np.ndarray
    eq_offsets: np.ndarray
    structure: Optional[ProductOfSimplices] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidDimensionError(f"Polytope dimension must be positive, got {self.dim}")
        normals = _frozen(self.facet_normals, 2, "facet_normals").reshape(-1, self.dim)
        offsets = _frozen(self.facet_offsets, 1, "facet_offsets")
        eq_normals = _frozen(self.eq_normals, 2, "eq_normals").reshape(-1, self.dim)
        eq_offsets = _frozen(self.eq_offsets, 1, "eq_offsets")
        if normals.shape[0] != offsets.shape[0] or eq_normals.shape[0] != eq_offsets.shape[0]:
            raise ShapeError("Constraint normals and offsets must have matching lengths")
        object.__setattr__(self, "facet_normals", normals)
        object.__setattr__(self, "facet_offsets", offsets)
        object.__setattr__(self, "eq_normals", eq_normals)
        object.__setattr__(self, "eq_offsets", eq_offsets)
        if self.vertices is not None:
            vertices = _frozen(self.vertices, 2, "vertices")
            if vertices.shape[1] != self.dim:
                raise ShapeError(f"Vertices have dimension {vertices.shape[1]}, expected {self.dim}")
            object.__setattr__(self, "vertices", vertices)
            for idx, vertex in enumerate(vertices):
                if self.violation(vertex) > MEMBERSHIP_TOL:
                    raise PointNotInPolytopeError(f"Vertex {idx} violates the facet description")
        if self.structure is not None and self.structure.N * self.structure.C != self.dim:
            raise InvalidDimensionError("ProductOfSimplices(N, C) requires dim = N*C")

    @property
    def n_vertices(self) -> int:
        if self.vertices is not None:
            return int(self.vertices.shape[0])
        assert self.structure is not None
        return int(self.structure.N) ** int(self.structure.C)

    def vertex_array(self) -> np.ndarray:
        """Explicit vertex matrix (|V| x d); raises when it was not materialised."""
        if self.vertices is None:
            raise VertexBudgetExceededError(
                f"Polytope has {self.n_vertices} vertices, above the enumeration budget"
            )
        return self.vertices

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint violation of x (0 when x is inside)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.facet_normals.size:
            worst = max(worst, float(np.max(self.facet_normals @ x - self.facet_offsets)))
        if self.eq_normals.size:
            worst = max(worst, float(np.max(np.abs(self.eq_normals @ x - self.eq_offsets))))
        return worst

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        return self.violation(x) <= tol

    def vertex_choices(self) -> np.ndarray:
        """For simplex products, the per-context action of every vertex (|V| x C)."""
        if self.structure is None:
            raise InvalidDimensionError("vertex_choices requires a ProductOfSimplices polytope")
        return product_choices(self.structure.N, self.structure.C)

    def to_dict(self) -> Dict[str, Any]:
        structure = None
        if self.structure is not None:
            structure = {"type": "product_of_simplices", "N": self.structure.N, "C": self.structure.C}
        return {
            "dim": self.dim,
            "vertices": None if self.vertices is None else self.vertices.tolist(),
            "facets": [
                {"a": a.tolist(), "b": float(b)} for a, b in zip(self.facet_normals, self.facet_offsets)
            ],
            "equalities": [
                {"a": a.tolist(), "b": float(b)} for a, b in zip(self.eq_normals, self.eq_offsets)
            ],
            "structure": structure,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Polytope":
        dim = int(payload["dim"])
        structure_payload = payload.get("structure")
        if structure_payload:
            structure = ProductOfSimplices(int(structure_payload["N"]), int(structure_payload["C"]))
            if payload.get("vertices") is None:
                return simplex_product(structure.N, structure.C, lazy=True)
        else:
            structure = None
        facets = payload.get("facets", [])
        equalities = payload.get("equalities", [])
        polytope = cls(
            dim=dim,
            vertices=payload.get("vertices"),
            facet_normals=np.array([f["a"] for f in facets], dtype=float).reshape(-1, dim),
            facet_offsets=np.array([f["b"] for f in facets], dtype=float),
            eq_normals=np.array([e["a"] for e in equalities], dtype=float).reshape(-1, dim),
            eq_offsets=np.array([e["b"] for e in equalities], dtype=float),
            structure=structure,
        )
        if structure is None:
            _check_extreme(polytope.vertex_array())
        return polytope


@dataclass(frozen=True)
class VertexDecomposition:
    """Convex weights over V(P), keyed by vertex index."""

    weights: Mapping[int, float]

    def __post_init__(self) -> None:
        if any(w < -DISTRIBUTION_TOL for w in self.weights.values()):
            raise ShapeError("Vertex decomposition weights must be nonnegative")
        total = sum(self.weights.values())
        if abs(total - 1.0) > DISTRIBUTION_TOL:
            raise ShapeError(f"Vertex decomposition weights sum to {total}, not 1")

    def dense(self, n_vertices: int) -> np.ndarray:
        out = np.zeros(n_vertices)
        for idx, weight in self.weights.items():
            out[idx] = weight
        return out

    def recompose(self, polytope: Polytope) -> np.ndarray:
        vertices = polytope.vertex_array()
        point = np.zeros(polytope.dim)
        for idx, weight in sorted(self.weights.items()):
            point += weight * vertices[idx]
        return point

    @property
    def support(self) -> List[int]:
        return sorted(idx for idx, weight in self.weights.items() if weight > 0.0)


@dataclass(frozen=True)
class VertexSwap:
    mapping: Tuple[int, ...]

    @classmethod
    def identity(cls, n_vertices: int) -> "VertexSwap":
        return cls(tuple(range(n_vertices)))

    def __call__(self, vertex: int) -> int:
        return self.mapping[vertex]


@dataclass(frozen=True, eq=False)
class HypercubeDecomposition:
    """Product-form weights over the sign patterns {-1, 1}^N."""

    patterns: np.ndarray
    weights: Sequence[Any]

    def recompose(self) -> Any:
        if isinstance(self.weights, np.ndarray):
            return self.weights @ self.patterns
        n = self.patterns.shape[1]
        total = [Fraction(0)] * n
        for weight, pattern in zip(self.weights, self.patterns):
            for j in range(n):
                total[j] += weight * int(pattern[j])
        return total


@dataclass(frozen=True, eq=False)
class ContractionSystem:
    """Linear constraints on vec(M) (row-major d x d) defining M(P)."""

    dim: int
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray

    def violation(self, matrix: np.ndarray) -> float:
        vec = np.asarray(matrix, dtype=float).reshape(-1)
        worst = 0.0
        if self.A_ub.size:
            worst = max(worst, float(np.max(self.A_ub @ vec - self.b_ub)))
        if self.A_eq.size:
            worst = max(worst, float(np.max(np.abs(self.A_eq @ vec - self.b_eq))))
        return worst

    def is_feasible(self, matrix: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (self.dim, self.dim):
            return False
        return self.violation(matrix) <= tol


@dataclass(frozen=True, eq=False)
class IntegralContraction:
    mapping: Tuple[int, ...]
    matrix: np.ndarray


def product_choices(N: int, C: int) -> np.ndarray:
    """All functions [C] -> [N] in lexicographic order, one row per vertex."""
    return np.array(list(itertools.product(range(N), repeat=C)), dtype=int).reshape(-1, C)


def product_vertex_index(choices: Sequence[int], N: int) -> int:
    """Index of the simplex-product vertex picking `choices[c]` in context c."""
    index = 0
    for choice in choices:
        index = index * N + int(choice)
    return index


def simplex(N: int) -> Polytope:
    """The probability simplex over N actions."""
    if N < 1:
        raise InvalidDimensionError(f"Simplex needs at least one action, got N={N}")
    return Polytope(
        dim=N,
        vertices=np.eye(N),
        facet_normals=-np.eye(N),
        facet_offsets=np.zeros(N),
        eq_normals=np.ones((1, N)),
        eq_offsets=np.ones(1),
        structure=ProductOfSimplices(N, 1),
    )


def simplex_product(N: int, C: int, *, budget: int = VERTEX_BUDGET, lazy: bool = False) -> Polytope:
    """Delta([N])^C; with `lazy` the vertex list is dropped instead of failing when over budget."""
    if N < 1 or C < 1:
        raise InvalidDimensionError(f"simplex_product needs N, C >= 1, got N={N}, C={C}")
    d = N * C
    count = N**C
    vertices: Optional[np.ndarray]
    if count > budget:
        if not lazy:
            raise VertexBudgetExceededError(f"{N}^{C} = {count} vertices exceeds the budget of {budget}")
        LOGGER.debug("simplex_product(%s, %s): %s vertices kept implicit", N, C, count)
        vertices = None
    else:
        choices = product_choices(N, C)
        vertices = np.zeros((count, d))
        rows = np.repeat(np.arange(count), C)
        cols = (np.arange(C) * N + choices).reshape(-1)
        vertices[rows, cols] = 1.0
    eq_normals = np.zeros((C, d))
    for c in range(C):
        eq_normals[c, c * N : (c + 1) * N] = 1.0
    return Polytope(
        dim=d,
        vertices=vertices,
        facet_normals=-np.eye(d),
        facet_offsets=np.zeros(d),
        eq_normals=eq_normals,
        eq_offsets=np.ones(C),
        structure=ProductOfSimplices(N, C),
    )


def _check_extreme(vertices: np.ndarray) -> None:
    """Reject vertex lists containing convex combinations of the other vertices."""
    k = vertices.shape[0]
    if k <= 1:
        return
    for idx in range(k):
        others = np.delete(vertices, idx, axis=0)
        A_eq = np.vstack([others.T, np.ones(k - 1)])
        b_eq = np.append(vertices[idx], 1.0)
        sol = solve_lp(np.zeros(k - 1), A_eq=A_eq, b_eq=b_eq, label="extreme-check", allow_infeasible=True)
        if sol is not None:
            raise ShapeError(f"Vertex {idx} is a convex combination of the other vertices")


def _as_point(x: Any, dim: int) -> np.ndarray:
    point = np.asarray(x, dtype=float)
    if point.shape != (dim,):
        raise ShapeError(f"Point has shape {point.shape}, expected ({dim},)")
    if not np.all(np.isfinite(point)):
        raise ShapeError("Point contains non-finite entries")
    return point


def caratheodory_decompose(P: Polytope, x: Any) -> VertexDecomposition:
    """Decompose x into at most d+1 vertices by repeated LP reduction.

    Deterministic given the vertex order: solve the feasibility LP on the
    current support, drop zero weights, and while the support columns are
    affinely dependent move along a null direction until a weight vanishes.
    """
    point = _as_point(x, P.dim)
    if not P.contains(point):
        raise PointNotInPolytopeError(f"Point violates P by {P.violation(point):.3e}")
    vertices = P.vertex_array()
    k = vertices.shape[0]
    hits = np.flatnonzero(np.max(np.abs(vertices - point), axis=1) <= MEMBERSHIP_TOL)
    if hits.size:
        return VertexDecomposition({int(hits[0]): 1.0})

    lifted = np.vstack([vertices.T, np.ones(k)])
    target = np.append(point, 1.0)
    support = np.arange(k)
    weights = np.full(k, 1.0 / k)
    rounds = 0
    while True:
        rounds += 1
        sol = solve_lp(
            np.zeros(support.size),
            A_eq=lifted[:, support],
            b_eq=target,
            label="caratheodory",
            allow_infeasible=True,
        )
        if sol is None:
            raise PointNotInPolytopeError("Point is not a convex combination of the vertices")
        keep = sol.x > _ZERO_WEIGHT
        support, weights = support[keep], sol.x[keep]
        directions = null_space(lifted[:, support])
        if directions.shape[1] == 0:
            break
        # Step along a null direction until the first weight reaches zero.
        z = directions[:, 0]
        if not np.any(z > 0):
            z = -z
        ratios = np.where(z > 0, weights / np.where(z > 0, z, 1.0), np.inf)
        pivot = int(np.argmin(ratios))
        weights = weights - ratios[pivot] * z
        weights[pivot] = 0.0
        keep = weights > _ZERO_WEIGHT
        support, weights = support[keep], weights[keep]
        if null_space(lifted[:, support]).shape[1] == 0:
            break

    # Affinely independent support: the weights are the unique solution.
    refined, *_ = np.linalg.lstsq(lifted[:, support], target, rcond=None)
    refined = np.clip(refined, 0.0, None)
    refined = refined / refined.sum()
    LOGGER.debug("caratheodory_decompose: support %s after %s rounds", support.tolist(), rounds)
    return VertexDecomposition({int(v): float(w) for v, w in zip(support, refined) if w > 0.0})


def sign_patterns(N: int) -> np.ndarray:
    """The 2^N points of {-1, 1}^N, lexicographic with -1 before 1."""
    return np.array(list(itertools.product((-1, 1), repeat=N)), dtype=np.int8).reshape(-1, N)


def hypercube_decompose(r: Any, *, exact: bool = False, budget: int = VERTEX_BUDGET) -> HypercubeDecomposition:
    """Closed-form convex weights over {-1,1}^N recomposing r.

    The weight of pattern s is prod_j (1 + s_j r_j) / 2. With `exact` the
    weights are `Fraction`s and recompose r with no rounding at all.
    """
    values = list(r) if exact else np.asarray(r, dtype=float)
    N = len(values)
    if N < 1:
        raise InvalidDimensionError("Cannot decompose an empty reward vector")
    if 2**N > budget:
        raise VertexBudgetExceededError(f"2^{N} sign patterns exceed the budget of {budget}")
    patterns = sign_patterns(N)
    if exact:
        exact_values = [Fraction(v) for v in values]
        if any(abs(v) > 1 for v in exact_values):
            raise RewardOutOfRangeError("Reward coordinates must lie in [-1, 1]")
        weights: List[Fraction] = []
        for pattern in patterns:
            weight = Fraction(1)
            for s, v in zip(pattern, exact_values):
                weight *= (1 + int(s) * v) / 2
            weights.append(weight)
        return HypercubeDecomposition(patterns=patterns, weights=weights)

    if np.any(np.abs(values) > 1.0 + MEMBERSHIP_TOL):
        raise RewardOutOfRangeError(f"Reward coordinates must lie in [-1, 1], got max |r| = {np.max(np.abs(values))}")
    values = np.clip(values, -1.0, 1.0)
    weights_arr = np.prod((1.0 + patterns * values) / 2.0, axis=1)
    return HypercubeDecomposition(patterns=patterns, weights=weights_arr)


def apply_vertex_swap(
    P: Polytope, pi: VertexSwap, rho: VertexDecomposition
) -> Tuple[VertexDecomposition, np.ndarray]:
    """Push rho forward through pi and return it with its recomposed point."""
    n = P.n_vertices
    if len(pi.mapping) != n:
        raise ShapeError(f"Vertex swap covers {len(pi.mapping)} vertices, P has {n}")
    pushed: Dict[int, float] = {}
    for vertex, weight in sorted(rho.weights.items()):
        image = pi(vertex)
        if not 0 <= image < n:
            raise ShapeError(f"Vertex swap maps {vertex} outside V(P)")
        pushed[image] = pushed.get(image, 0.0) + weight
    swapped = VertexDecomposition(pushed)
    return swapped, swapped.recompose(P)


def contraction_constraints(P: Polytope) -> ContractionSystem:
    """Constraints a.(Mv) <= b and a.(Mv) = b for every vertex v and constraint (a, b)."""
    vertices = P.vertex_array()
    d = P.dim
    k = vertices.shape[0]

    def rows(normals: np.ndarray, offsets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if normals.size == 0:
            return np.zeros((0, d * d)), np.zeros(0)
        coeffs = np.einsum("fi,vk->vfik", normals, vertices).reshape(k * normals.shape[0], d * d)
        rhs = np.tile(offsets, k)
        stacked = np.unique(np.column_stack([coeffs, rhs]), axis=0)
        return stacked[:, :-1], stacked[:, -1]

    A_ub, b_ub = rows(P.facet_normals, P.facet_offsets)
    A_eq, b_eq = rows(P.eq_normals, P.eq_offsets)
    return ContractionSystem(dim=d, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)


def integral_contractions(P: Polytope, *, max_maps: int = 10**5) -> List[IntegralContraction]:
    """Vertex-to-vertex maps of P that extend to a linear map, with one such matrix each."""
    vertices = P.vertex_array()
    k = vertices.shape[0]
    if k**k > max_maps:
        raise VertexBudgetExceededError(f"{k}^{k} vertex maps exceed the budget of {max_maps}")
    found: List[IntegralContraction] = []
    for mapping in itertools.product(range(k), repeat=k):
        images = vertices[list(mapping)]
        transposed, *_ = np.linalg.lstsq(vertices, images, rcond=None)
        if np.max(np.abs(vertices @ transposed - images)) <= MEMBERSHIP_TOL:
            found.append(IntegralContraction(mapping=tuple(mapping), matrix=transposed.T.copy()))
    LOGGER.debug("integral_contractions: %s of %s vertex maps are linear", len(found), k**k)
    return found


__all__ = [
    "ContractionSystem",
    "HypercubeDecomposition",
    "IntegralContraction",
    "Polytope",
    "ProductOfSimplices",
    "VertexDecomposition",
    "VertexSwap",
    "apply_vertex_swap",
    "caratheodory_decompose",
    "contraction_constraints",
    "hypercube_decompose",
    "integral_contractions",
    "product_choices",
    "product_vertex_index",
    "sign_patterns",
    "simplex",
    "simplex_product",
]
