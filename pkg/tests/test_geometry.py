from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from stackelberg_lab.errors import (
    InvalidDimensionError,
    PointNotInPolytopeError,
    RewardOutOfRangeError,
    ShapeError,
    VertexBudgetExceededError,
)
from stackelberg_lab.geometry import (
    Polytope,
    VertexDecomposition,
    VertexSwap,
    apply_vertex_swap,
    caratheodory_decompose,
    contraction_constraints,
    hypercube_decompose,
    integral_contractions,
    product_vertex_index,
    sign_patterns,
    simplex,
    simplex_product,
)


def test_simplex_vertices_and_membership() -> None:
    P = simplex(3)
    assert P.n_vertices == 3
    np.testing.assert_array_equal(P.vertex_array(), np.eye(3))
    assert P.contains(np.array([0.2, 0.3, 0.5]))
    assert not P.contains(np.array([0.6, 0.6, -0.2]))
    assert not P.contains(np.array([0.5, 0.5]))


def test_simplex_rejects_empty_action_set() -> None:
    with pytest.raises(InvalidDimensionError):
        simplex(0)


def test_simplex_product_is_context_major_and_lexicographic() -> None:
    P = simplex_product(2, 2)
    V = P.vertex_array()
    # v11, v12, v21, v22
    np.testing.assert_array_equal(V[0], [1, 0, 1, 0])
    np.testing.assert_array_equal(V[1], [1, 0, 0, 1])
    np.testing.assert_array_equal(V[2], [0, 1, 1, 0])
    np.testing.assert_array_equal(V[3], [0, 1, 0, 1])
    assert product_vertex_index([0, 1], 2) == 1
    assert product_vertex_index([1, 0], 2) == 2
    np.testing.assert_array_equal(P.vertex_choices()[3], [1, 1])


def test_simplex_product_budget() -> None:
    with pytest.raises(VertexBudgetExceededError):
        simplex_product(10, 7, budget=1000)
    lazy = simplex_product(10, 7, budget=1000, lazy=True)
    assert lazy.vertices is None
    assert lazy.n_vertices == 10**7
    assert lazy.contains(np.full(70, 0.1))
    with pytest.raises(VertexBudgetExceededError):
        lazy.vertex_array()


@pytest.mark.parametrize("seed", range(5))
def test_caratheodory_decomposition_recomposes_with_small_support(seed: int) -> None:
    rng = np.random.default_rng(seed)
    P = simplex_product(3, 2)
    x = np.concatenate([rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))])
    rho = caratheodory_decompose(P, x)
    assert len(rho.support) <= P.dim + 1
    np.testing.assert_allclose(rho.recompose(P), x, atol=1e-9)
    assert sum(rho.weights.values()) == pytest.approx(1.0, abs=1e-12)


def test_caratheodory_vertex_is_its_own_decomposition() -> None:
    P = simplex_product(2, 2)
    rho = caratheodory_decompose(P, P.vertex_array()[2])
    assert rho.weights == {2: 1.0}


def test_caratheodory_rejects_outside_points() -> None:
    with pytest.raises(PointNotInPolytopeError):
        caratheodory_decompose(simplex(2), [1.5, -0.5])
    with pytest.raises(ShapeError):
        caratheodory_decompose(simplex(2), [1.0, 0.0, 0.0])


def test_vertex_decomposition_validates_weights() -> None:
    with pytest.raises(ShapeError):
        VertexDecomposition({0: 0.5, 1: 0.4})
    with pytest.raises(ShapeError):
        VertexDecomposition({0: 1.5, 1: -0.5})


def test_apply_vertex_swap_pushes_weights_forward() -> None:
    P = simplex_product(2, 2)
    rho = VertexDecomposition({0: 0.25, 3: 0.75})
    swapped, point = apply_vertex_swap(P, VertexSwap((1, 1, 2, 2)), rho)
    assert swapped.weights == {1: 0.25, 2: 0.75}
    np.testing.assert_allclose(point, 0.25 * P.vertex_array()[1] + 0.75 * P.vertex_array()[2])
    same, _ = apply_vertex_swap(P, VertexSwap.identity(4), rho)
    assert same.weights == rho.weights
    with pytest.raises(ShapeError):
        apply_vertex_swap(P, VertexSwap((0, 1)), rho)


def test_hypercube_decomposition_recomposes() -> None:
    r = np.array([0.3, -0.8, 1.0])
    decomposition = hypercube_decompose(r)
    assert decomposition.patterns.shape == (8, 3)
    assert np.all(decomposition.weights >= 0)
    assert decomposition.weights.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(decomposition.recompose(), r, atol=1e-12)


def test_hypercube_decomposition_exact() -> None:
    r = [Fraction(1, 3), Fraction(-1, 7)]
    decomposition = hypercube_decompose(r, exact=True)
    assert sum(decomposition.weights) == 1
    assert decomposition.recompose() == r


def test_hypercube_decomposition_rejects_large_rewards() -> None:
    with pytest.raises(RewardOutOfRangeError):
        hypercube_decompose([1.5, 0.0])
    with pytest.raises(RewardOutOfRangeError):
        hypercube_decompose([Fraction(3, 2)], exact=True)


def test_sign_patterns_order() -> None:
    np.testing.assert_array_equal(sign_patterns(2), [[-1, -1], [-1, 1], [1, -1], [1, 1]])


def test_contraction_constraints() -> None:
    P = simplex_product(2, 2)
    system = contraction_constraints(P)
    assert system.is_feasible(np.eye(4))
    # Constant map onto v11: coordinates of any x in P sum to 2.
    constant = np.outer(P.vertex_array()[0], np.ones(4)) / 2.0
    assert system.is_feasible(constant)
    assert not system.is_feasible(2.0 * np.eye(4))
    assert not system.is_feasible(np.eye(3))


def test_integral_contractions_count() -> None:
    assert len(integral_contractions(simplex(3))) == 27
    maps = integral_contractions(simplex_product(2, 2))
    assert len(maps) == 36
    P = simplex_product(2, 2)
    system = contraction_constraints(P)
    V = P.vertex_array()
    for contraction in maps:
        assert system.is_feasible(contraction.matrix, tol=1e-8)
        np.testing.assert_allclose(V @ contraction.matrix.T, V[list(contraction.mapping)], atol=1e-8)


def test_polytope_dict_round_trip_keeps_structure() -> None:
    P = simplex_product(2, 3)
    restored = Polytope.from_dict(P.to_dict())
    assert restored.structure == P.structure
    np.testing.assert_array_equal(restored.vertex_array(), P.vertex_array())


def test_polytope_from_dict_rejects_non_extreme_vertices() -> None:
    payload = {
        "dim": 1,
        "vertices": [[0.0], [1.0], [0.5]],
        "facets": [{"a": [-1.0], "b": 0.0}, {"a": [1.0], "b": 1.0}],
        "equalities": [],
        "structure": None,
    }
    with pytest.raises(ShapeError):
        Polytope.from_dict(payload)
