from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from stackelberg_lab.errors import PointNotInPolytopeError, RewardOutOfRangeError, ShapeError
from stackelberg_lab.games import (
    BayesianGame,
    PolytopeGame,
    StandardGame,
    Transcript,
    TranscriptBuilder,
    bayesian_to_polytope,
    bayesian_utility,
    load_game,
    polytope_utility,
    save_game,
    standard_to_polytope,
    standard_utility,
    to_polytope_game,
)
from stackelberg_lab.generators import random_bayesian_game, random_standard_game, selling_game
from stackelberg_lab.geometry import simplex


def test_standard_game_validation() -> None:
    with pytest.raises(RewardOutOfRangeError):
        StandardGame(u_O=[[2.0]], u_L=[[0.0]])
    with pytest.raises(ShapeError):
        StandardGame(u_O=[[0.0, 1.0]], u_L=[[0.0]])
    with pytest.raises(ShapeError):
        StandardGame(u_O=[[np.nan]], u_L=[[0.0]])


def test_bayesian_game_requires_a_distribution() -> None:
    u = np.zeros((1, 1, 2))
    with pytest.raises(ShapeError):
        BayesianGame(p=[0.5, 0.6], u_O=u, u_L=u)
    with pytest.raises(ShapeError):
        BayesianGame(p=[1.0], u_O=u, u_L=u)


def test_standard_utility_and_polytope_form_agree() -> None:
    G = StandardGame(u_O=[[1.0, 0.0], [0.0, 0.5]], u_L=[[0.0, 1.0], [1.0, 0.0]])
    alpha, beta = [0.25, 0.75], [0.5, 0.5]
    assert standard_utility(G, alpha, beta) == pytest.approx((0.25 * 0.5 + 0.75 * 0.25, 0.5))
    assert polytope_utility(standard_to_polytope(G), alpha, beta) == pytest.approx(standard_utility(G, alpha, beta))


def test_bayesian_polytope_form_scales_by_context_probability() -> None:
    G = selling_game()
    poly = bayesian_to_polytope(G)
    assert poly.P.structure.N == 2 and poly.P.structure.C == 2
    # Price 0, buying in context 2 is worth u_L = 1/2, scaled by p = 1/2.
    assert poly.R[0, 3] == pytest.approx(0.25)
    assert poly.S[1, 1] == pytest.approx(0.5)
    alpha = [0.75, 0.25]
    beta = np.array([[0.3, 0.7], [0.0, 1.0]])
    assert polytope_utility(poly, alpha, beta.reshape(-1)) == pytest.approx(bayesian_utility(G, alpha, beta))


@pytest.mark.parametrize("seed", range(25))
def test_standard_conversion_preserves_utilities(seed: int) -> None:
    rng = np.random.default_rng(seed)
    M, N = rng.integers(2, 6, size=2)
    G = random_standard_game(int(M), int(N), rng)
    poly = standard_to_polytope(G)
    for _ in range(5):
        alpha, beta = rng.dirichlet(np.ones(M)), rng.dirichlet(np.ones(N))
        assert polytope_utility(poly, alpha, beta) == pytest.approx(standard_utility(G, alpha, beta), abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_bayesian_conversion_preserves_utilities(seed: int) -> None:
    rng = np.random.default_rng(seed)
    M, N, C = rng.integers(2, 5, size=3)
    G = random_bayesian_game(int(M), int(N), int(C), rng)
    poly = bayesian_to_polytope(G)
    for _ in range(5):
        alpha = rng.dirichlet(np.ones(M))
        beta = rng.dirichlet(np.ones(N), size=C)
        assert polytope_utility(poly, alpha, beta.reshape(-1)) == pytest.approx(
            bayesian_utility(G, alpha, beta), abs=1e-12
        )


def test_polytope_game_rejects_mismatched_vertices() -> None:
    with pytest.raises(ShapeError):
        PolytopeGame(P=simplex(2), R=np.zeros((1, 3)), S=np.zeros((1, 3)))
    with pytest.raises(ShapeError):
        PolytopeGame(P=simplex(2), R=np.zeros((0, 2)), S=np.zeros((0, 2)))


def test_polytope_utility_checks_membership() -> None:
    game = standard_to_polytope(StandardGame(u_O=[[1.0, 0.0]], u_L=[[0.0, 1.0]]))
    with pytest.raises(PointNotInPolytopeError):
        polytope_utility(game, [1.0], [0.7, 0.7])
    with pytest.raises(ShapeError):
        game.reward([0.5, 0.5])


def _short_transcript() -> Transcript:
    game = to_polytope_game(selling_game())
    builder = TranscriptBuilder(game)
    x = np.array([1.0, 0.0, 0.0, 1.0])
    for q in ([1.0, 0.0], [0.5, 0.5], [0.0, 1.0]):
        q = np.array(q)
        builder.append(q, x, game.reward(q))
    return builder.freeze({"note": "short"})


def test_transcript_builder_records_utilities() -> None:
    transcript = _short_transcript()
    assert transcript.T == 3
    transcript.validate()
    # Optimizer earns p_2 * price when the learner buys only in context 2.
    np.testing.assert_allclose(transcript.u_O, [0.0, 0.25, 0.5])
    assert transcript.optimizer_average == pytest.approx(0.25)
    assert transcript.metadata == {"note": "short"}


def test_transcript_validate_detects_tampering() -> None:
    transcript = _short_transcript()
    tampered = Transcript(
        q_weights=transcript.q_weights,
        x=transcript.x,
        r=transcript.r,
        u_O=transcript.u_O + 0.1,
        u_L=transcript.u_L,
        game=transcript.game,
    )
    with pytest.raises(ShapeError):
        tampered.validate()


def test_transcript_csv_round_trip(tmp_path: Path) -> None:
    transcript = _short_transcript()
    path = tmp_path / "nested" / "transcript.csv"
    transcript.write_csv(path)
    restored = Transcript.read_csv(path, game=transcript.game)
    np.testing.assert_array_equal(restored.x, transcript.x)
    np.testing.assert_array_equal(restored.r, transcript.r)
    np.testing.assert_array_equal(restored.u_O, transcript.u_O)
    restored.validate()


def test_transcript_rejects_ragged_columns() -> None:
    with pytest.raises(ShapeError):
        Transcript(q_weights=np.ones((2, 1)), x=np.ones((2, 1)), r=np.ones((2, 1)), u_O=np.ones(3), u_L=np.ones(2))


def test_game_files_round_trip(tmp_path: Path) -> None:
    G = selling_game()
    save_game(G, tmp_path / "selling.json")
    loaded = load_game(tmp_path / "selling.json")
    assert isinstance(loaded, BayesianGame)
    np.testing.assert_array_equal(loaded.u_L, G.u_L)
    poly = to_polytope_game(G)
    save_game(poly, tmp_path / "poly.json")
    loaded_poly = load_game(tmp_path / "poly.json")
    np.testing.assert_array_equal(loaded_poly.R, poly.R)
    assert loaded_poly.P.structure == poly.P.structure
