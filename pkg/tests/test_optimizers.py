from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from stackelberg_lab.errors import BadHorizonError, DegenerateGameError, OutOfRangeRoundError, ShapeError
from stackelberg_lab.equilibria import stackelberg_polytope
from stackelberg_lab.games import PolytopeGame, StandardGame, to_polytope_game
from stackelberg_lab.generators import selling_game
from stackelberg_lab.geometry import simplex
from stackelberg_lab.optimizers import (
    exact_replay_total,
    hedge_regret_bound,
    perturbed_stackelberg,
    replay_exploit,
    static_strategy,
    two_phase_price,
)


def test_static_strategy_validates_weights() -> None:
    optimizer = static_strategy([0.25, 0.75])
    np.testing.assert_array_equal(optimizer.act(1, []), [0.25, 0.75])
    np.testing.assert_array_equal(optimizer.act(99, []), [0.25, 0.75])
    assert optimizer.n_q == 2
    with pytest.raises(ShapeError):
        static_strategy([0.5, 0.6])
    with pytest.raises(ShapeError):
        static_strategy([])


def test_hedge_regret_bound() -> None:
    assert hedge_regret_bound(4, 200) == pytest.approx(math.sqrt(200 * math.log(4) / 2))
    assert hedge_regret_bound(1, 200) == hedge_regret_bound(2, 200)


def test_perturbed_stackelberg_on_the_selling_game() -> None:
    game = to_polytope_game(selling_game())
    T = 20000
    optimizer = perturbed_stackelberg(game, None, T)
    # Buying in both contexts has the larger margin among the optimal responses.
    assert optimizer.vertex == 3
    assert optimizer.margin == pytest.approx(0.125, abs=1e-9)
    expected_eps = math.sqrt(hedge_regret_bound(4, T) / T)
    assert optimizer.epsilon == pytest.approx(expected_eps)
    assert optimizer.weights.sum() == pytest.approx(1.0)
    # The perturbation keeps "buy everywhere" a strict best response.
    reward = optimizer.weights @ game.R
    assert reward[1] > reward[0] and reward[3] > reward[2]
    assert optimizer.describe()["optimizer"] == "perturbed_stackelberg"


def test_perturbed_stackelberg_leaves_the_solution_record_alone() -> None:
    game = to_polytope_game(selling_game())
    optimizer = perturbed_stackelberg(game, None, 1000)
    # The margin belongs to the perturbed target vertex, not to solution.response.
    assert optimizer.margin > 0
    assert optimizer.solution.margin == 0.0
    assert optimizer.solution.to_dict()["margin"] == 0.0
    assert stackelberg_polytope(game).margin == 0.0


def test_perturbed_stackelberg_epsilon_is_capped() -> None:
    game = to_polytope_game(selling_game())
    optimizer = perturbed_stackelberg(game, regret_bound=50.0, T=10)
    assert optimizer.epsilon == 1.0
    with pytest.raises(BadHorizonError):
        perturbed_stackelberg(game, None, 0)
    with pytest.raises(ShapeError):
        perturbed_stackelberg(game, -1.0, 10)


def test_perturbed_stackelberg_rejects_degenerate_games() -> None:
    # The learner's payoff never depends on the optimizer, so no response can be strict.
    game = PolytopeGame(P=simplex(2), R=np.zeros((2, 2)), S=np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(DegenerateGameError):
        perturbed_stackelberg(game, None, 100)


def test_replay_exploit_plays_the_schedule() -> None:
    schedule = np.array([[1.0, 0.0], [0.25, 0.75]])
    optimizer = replay_exploit(schedule)
    np.testing.assert_array_equal(optimizer.act(2, []), [0.25, 0.75])
    with pytest.raises(OutOfRangeRoundError):
        optimizer.act(3, [])
    with pytest.raises(OutOfRangeRoundError):
        optimizer.act(0, [])
    with pytest.raises(ShapeError):
        replay_exploit([[0.5, 0.4]])


def test_two_phase_price() -> None:
    optimizer = two_phase_price(4)
    rounds = [optimizer.act(t, []).tolist() for t in range(1, 5)]
    assert rounds == [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
    with pytest.raises(BadHorizonError):
        two_phase_price(5)
    with pytest.raises(OutOfRangeRoundError):
        optimizer.act(5, [])


def test_exact_replay_total() -> None:
    G = StandardGame(u_O=[[0.5, -0.5], [0.0, 1.0]], u_L=[[0.0, 0.0], [0.0, 0.0]])
    schedule = [[Fraction(1, 3), Fraction(2, 3)], [Fraction(1), Fraction(0)]]
    actions = np.array([[0.5, 0.5], [0.0, 1.0]])
    # Round 1: 1/3 * 0 + 2/3 * 1/2; round 2: -1/2.
    assert exact_replay_total(G.u_O, schedule, actions) == Fraction(1, 3) - Fraction(1, 2)
    with pytest.raises(ShapeError):
        exact_replay_total(G.u_O, schedule[:1], actions)
