from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from stackelberg_lab.config import HYPERCUBE_MAX_DIM
from stackelberg_lab.errors import (
    BadGraphError,
    BadHorizonError,
    InvalidDimensionError,
    PointNotInPolytopeError,
    ShapeError,
    VertexBudgetExceededError,
)
from stackelberg_lab.generators import (
    Graph,
    LearningInstance,
    contraction_scale,
    cycling_instance,
    dominating_set_game,
    exact_schedule,
    lemma1_game,
    lemma_linear_game,
    petersen_graph,
    selling_game,
    separation_game,
    separation_instance,
    single_edge,
    small_graphs,
)
from stackelberg_lab.geometry import sign_patterns, simplex, simplex_product


def test_separation_instance_quarters() -> None:
    instance, trajectory = separation_instance(8)
    V = simplex_product(2, 2).vertex_array()
    np.testing.assert_array_equal(instance.rewards[0], V[0])
    np.testing.assert_array_equal(instance.rewards[2], V[1])
    np.testing.assert_array_equal(instance.rewards[4], V[2])
    np.testing.assert_array_equal(instance.rewards[7], V[0])
    np.testing.assert_array_equal(trajectory[[0, 2, 4, 6]], V)


def test_separation_game_schedule_and_learner() -> None:
    game, schedule, learner = separation_game(8)
    assert game.n_q == 4
    np.testing.assert_array_equal(schedule.argmax(axis=1), [0, 0, 1, 1, 2, 2, 3, 3])
    np.testing.assert_array_equal(game.reward(schedule[6]), game.P.vertex_array()[0])
    assert learner.horizon == 8


@pytest.mark.parametrize("T", [0, 6, 10])
def test_separation_needs_multiple_of_four(T: int) -> None:
    with pytest.raises(BadHorizonError):
        separation_instance(T)


def test_selling_game_payoffs() -> None:
    G = selling_game()
    assert (G.M, G.N, G.C) == (2, 2, 2)
    assert G.u_L[0, 1, 0] == pytest.approx(0.25)
    assert G.u_L[1, 1, 0] == pytest.approx(-0.75)
    assert G.u_L[1, 1, 1] == pytest.approx(-0.5)
    assert G.u_O[1, 1, 0] == 1.0 and G.u_O[1, 0, 0] == 0.0


def test_graph_parsing_and_validation() -> None:
    H = Graph.parse("3\n1 2\n2 3\n")
    assert H.V == 3
    assert H.neighbors(1) == [0, 2]
    assert H.max_degree == 2
    assert Graph.parse(H.to_text()) == H
    with pytest.raises(BadGraphError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(BadGraphError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(BadGraphError):
        Graph.parse("")


def test_small_graph_family() -> None:
    assert len(small_graphs(2)) == 2
    assert len(small_graphs(3)) == 4
    assert len(small_graphs(4, max_degree=3)) == 11


def test_petersen_graph_is_cubic() -> None:
    H = petersen_graph()
    assert H.V == 10
    assert len(H.edges) == 15
    assert all(H.degree(v) == 3 for v in range(10))


def test_dominating_set_game_shape() -> None:
    G = dominating_set_game(single_edge())
    assert (G.M, G.N, G.C) == (3, 5, 4)
    np.testing.assert_allclose(G.p, 0.25)
    # Context v = 0, learner claims from nbr(0, 1) = vertex 1 while the optimizer plays 1.
    assert G.u_L[1, 1, 0] == pytest.approx(1.0 - 0.25)
    assert G.u_O[1, 1, 0] == pytest.approx(0.5 - 1.0)
    bonus = dominating_set_game(single_edge(), type_bonus=True)
    assert bonus.u_O[2, 4, 2] == pytest.approx(0.5)


def test_dominating_set_game_rejects_high_degree() -> None:
    star = Graph.from_edges(5, [(0, v) for v in range(1, 5)])
    with pytest.raises(BadGraphError):
        dominating_set_game(star)


def _simplex_instance(seed: int, N: int = 3, T: int = 30) -> LearningInstance:
    rng = np.random.default_rng(seed)
    return LearningInstance(P=simplex(N), rewards=rng.uniform(-1, 1, size=(T, N)))


def test_lemma1_game_schedule_reproduces_rewards() -> None:
    instance = _simplex_instance(0)
    actions = np.random.default_rng(1).dirichlet(np.ones(3), size=instance.T)
    game, schedule = lemma1_game(instance, actions, [1, 2, 0])
    assert game.M == 8
    np.testing.assert_allclose(schedule @ game.u_L, instance.rewards, atol=1e-12)
    np.testing.assert_allclose(game.u_O, (game.u_L[:, [1, 2, 0]] - game.u_L) / 2)


def test_lemma1_game_validates_inputs() -> None:
    instance = _simplex_instance(0)
    actions = np.full((instance.T, 3), 1.0 / 3)
    with pytest.raises(ShapeError):
        lemma1_game(instance, actions, [0, 1, 3])
    with pytest.raises(PointNotInPolytopeError):
        lemma1_game(instance, np.full((instance.T, 3), 0.5), [0, 1, 2])
    product = LearningInstance(P=simplex_product(2, 2), rewards=np.zeros((2, 4)))
    with pytest.raises(InvalidDimensionError):
        lemma1_game(product, np.full((2, 4), 0.5), [0, 1])


def test_exact_schedule_is_exact() -> None:
    instance = _simplex_instance(2, T=3)
    patterns = sign_patterns(3)
    for weights, reward in zip(exact_schedule(instance), instance.rewards):
        assert sum(weights) == 1
        for j in range(3):
            assert sum(w * int(s[j]) for w, s in zip(weights, patterns)) == Fraction(float(reward[j]))


def test_lemma_linear_game_with_identity_pays_nothing() -> None:
    P = simplex_product(2, 2)
    instance = LearningInstance(P=P, rewards=np.random.default_rng(3).uniform(-1, 1, size=(5, 4)))
    actions = np.tile(P.vertex_array()[0], (5, 1))
    game, schedule = lemma_linear_game(instance, actions, np.eye(4))
    assert contraction_scale(np.eye(4)) == 0.0
    assert game.n_q == 16
    np.testing.assert_array_equal(game.S, 0.0)
    np.testing.assert_allclose(schedule @ game.R, instance.rewards, atol=1e-12)


def test_lemma_linear_game_rejects_non_contractions() -> None:
    P = simplex_product(2, 2)
    instance = LearningInstance(P=P, rewards=np.zeros((2, 4)))
    with pytest.raises(PointNotInPolytopeError):
        lemma_linear_game(instance, np.tile(P.vertex_array()[0], (2, 1)), 2.0 * np.eye(4))


def test_lemma_linear_game_caps_the_hypercube_dimension() -> None:
    d = HYPERCUBE_MAX_DIM + 1
    P = simplex(d)
    instance = LearningInstance(P=P, rewards=np.zeros((1, d)))
    with pytest.raises(VertexBudgetExceededError):
        lemma_linear_game(instance, P.vertex_array()[:1], np.eye(d))


def test_cycling_instance_is_bounded_and_seeded() -> None:
    P = simplex(3)
    first = cycling_instance(P, 500, np.random.default_rng(7))
    second = cycling_instance(P, 500, np.random.default_rng(7))
    np.testing.assert_array_equal(first.rewards, second.rewards)
    assert np.max(np.abs(first.rewards)) <= 1.0
    assert first.T == 500
