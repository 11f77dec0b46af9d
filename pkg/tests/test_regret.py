from __future__ import annotations

import numpy as np
import pytest

from stackelberg_lab.errors import InvalidDimensionError, PointNotInPolytopeError, ShapeError
from stackelberg_lab.generators import separation_instance
from stackelberg_lab.geometry import contraction_constraints, simplex, simplex_product
from stackelberg_lab.regret import (
    audit,
    brute_force_polytope_swap_regret,
    brute_force_swap_regret,
    contextual_external_regret,
    contextual_swap_diagnostics,
    external_regret,
    integral_linear_swap_regret,
    linear_gain,
    linear_swap_regret,
    polytope_swap_regret,
    polytope_swap_value,
    swap_gain,
    swap_regret,
)


def _random_simplex_transcript(seed: int, N: int = 3, T: int = 20):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, size=(T, N)), rng.dirichlet(np.ones(N), size=T)


def test_external_regret_small_example() -> None:
    rewards = np.array([[1.0, 0.0], [1.0, 0.0]])
    actions = np.array([[0.0, 1.0], [0.0, 1.0]])
    report = external_regret(rewards, actions)
    assert report.value == pytest.approx(2.0)
    assert report.witness == {"action": 0}
    assert not report.numerically_zero


def test_swap_regret_witness_reproduces_value() -> None:
    rewards, actions = _random_simplex_transcript(0)
    report = swap_regret(rewards, actions)
    assert swap_gain(rewards, actions, report.witness["pi"]) == pytest.approx(report.value, abs=1e-12)
    assert report.value >= external_regret(rewards, actions).value - 1e-12


def test_swap_regret_prefers_identity_on_ties() -> None:
    rewards = np.zeros((3, 3))
    actions = np.full((3, 3), 1 / 3)
    report = swap_regret(rewards, actions)
    assert report.witness["pi"] == [0, 1, 2]
    assert report.value == 0.0
    assert report.numerically_zero


@pytest.mark.parametrize("seed", range(10))
def test_swap_notions_coincide_on_a_simplex(seed: int) -> None:
    rewards, actions = _random_simplex_transcript(seed)
    P = simplex(3)
    swap = swap_regret(rewards, actions).value
    assert brute_force_swap_regret(rewards, actions) == pytest.approx(swap, abs=1e-10)
    assert linear_swap_regret(P, rewards, actions).value == pytest.approx(swap, abs=1e-8)
    assert polytope_swap_regret(P, rewards, actions).value == pytest.approx(swap, abs=1e-8)


def test_linear_swap_witness_is_a_contraction() -> None:
    P = simplex_product(2, 2)
    rng = np.random.default_rng(5)
    rewards = rng.uniform(-1, 1, size=(15, 4))
    actions = np.vstack([np.concatenate([rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))]) for _ in range(15)])
    report = linear_swap_regret(P, rewards, actions)
    M = report.witness["M"]
    assert contraction_constraints(P).is_feasible(M, tol=1e-8)
    assert linear_gain(rewards, actions, M) == pytest.approx(report.value, abs=1e-8)
    assert report.value >= -1e-9


def test_separation_instance_splits_linear_and_polytope_swap_regret() -> None:
    instance, trajectory = separation_instance(40)
    poly = polytope_swap_regret(instance.P, instance.rewards, trajectory)
    lin = linear_swap_regret(instance.P, instance.rewards, trajectory)
    assert poly.value == pytest.approx(20.0, abs=1e-8)
    assert lin.value <= 1e-9
    replayed = polytope_swap_value(instance.P, instance.rewards, trajectory, poly.witness["rho"], poly.witness["pi"])
    assert replayed == pytest.approx(poly.value, abs=1e-8)


def test_grid_oracle_agrees_on_the_separation_instance() -> None:
    instance, trajectory = separation_instance(8)
    oracle = brute_force_polytope_swap_regret(instance.P, instance.rewards, trajectory)
    assert oracle == pytest.approx(4.0, abs=0.02)


def test_grid_oracle_limits() -> None:
    P = simplex_product(2, 2)
    with pytest.raises(InvalidDimensionError):
        brute_force_polytope_swap_regret(P, np.zeros((9, 4)), np.tile(P.vertex_array()[0], (9, 1)))
    with pytest.raises(InvalidDimensionError):
        brute_force_swap_regret(np.zeros((2, 5)), np.full((2, 5), 0.2))


def test_contextual_external_regret() -> None:
    p = np.array([0.5, 0.5])
    # Context 0 favours action 1, context 1 favours action 0; the learner plays action 0 everywhere.
    rewards = np.array([[[0.0, 1.0], [1.0, 0.0]]] * 4)
    actions = np.array([[[1.0, 0.0], [1.0, 0.0]]] * 4)
    report = contextual_external_regret(p, rewards, actions)
    assert report.value == pytest.approx(2.0)
    assert report.witness == {"f": [1, 0]}
    with pytest.raises(ShapeError):
        contextual_external_regret([1.0], rewards, actions)


def test_auditors_reject_points_outside_the_polytope() -> None:
    P = simplex(2)
    with pytest.raises(PointNotInPolytopeError):
        linear_swap_regret(P, np.zeros((1, 2)), np.array([[0.9, 0.9]]))
    with pytest.raises(ShapeError):
        swap_regret(np.zeros((2, 2)), np.zeros((3, 2)))


def test_audit_dispatch() -> None:
    rewards, actions = _random_simplex_transcript(1)
    P = simplex(3)
    assert audit(P, rewards, actions, "swap").value == pytest.approx(swap_regret(rewards, actions).value)
    assert audit(P, rewards, actions, "external").notion == "external"
    with pytest.raises(ShapeError):
        audit(P, rewards, actions, "internal")
    product = simplex_product(2, 2)
    instance, trajectory = separation_instance(8)
    with pytest.raises(InvalidDimensionError):
        audit(product, instance.rewards, trajectory, "swap")
    contextual = audit(product, instance.rewards, trajectory, "contextual_external", p=[0.5, 0.5])
    assert contextual.notion == "contextual_external"


def test_contextual_swap_diagnostics_on_the_separation_instance() -> None:
    instance, trajectory = separation_instance(8)
    diagnostics = contextual_swap_diagnostics(instance.P, [0.5, 0.5], instance.rewards, trajectory)
    assert len(diagnostics.per_context_swap) == 2
    assert diagnostics.polytope_swap is not None
    assert diagnostics.polytope_swap.value == pytest.approx(4.0, abs=1e-8)
    assert diagnostics.linear_swap.value <= 1e-9
    payload = diagnostics.to_dict()
    assert payload["polytope_swap"]["notion"] == "polytope_swap"


def _random_product_transcript(seed: int, T: int, resolution: int = 0):
    """Random rewards and interior actions on Delta2^2, optionally on the 1/resolution grid."""
    rng = np.random.default_rng(seed)
    rewards = rng.uniform(-1, 1, size=(T, 4))
    if resolution:
        a, b = rng.integers(1, resolution, size=(2, T)) / resolution
    else:
        a, b = rng.uniform(0.05, 0.95, size=(2, T))
    return rewards, np.column_stack([a, 1 - a, b, 1 - b])


@pytest.mark.parametrize("seed", range(6))
def test_grid_oracle_brackets_polytope_swap_regret_at_interior_points(seed: int) -> None:
    P = simplex_product(2, 2)
    resolution = 50
    rewards, actions = _random_product_transcript(seed, T=3, resolution=resolution)
    exact = polytope_swap_regret(P, rewards, actions).value
    oracle = brute_force_polytope_swap_regret(P, rewards, actions, resolution=resolution)
    # Rounding the one free decomposition weight to the grid moves each round by at most ptp/resolution.
    slack = float(np.sum(np.ptp(rewards @ P.vertex_array().T, axis=1))) / resolution
    assert exact <= oracle + 1e-7
    assert oracle <= exact + slack + 1e-7


@pytest.mark.parametrize("seed", range(10))
def test_swap_notions_are_ordered_on_a_simplex_product(seed: int) -> None:
    P = simplex_product(2, 2)
    rewards, actions = _random_product_transcript(seed, T=12)
    best_vertex = float(np.max(rewards.sum(axis=0) @ P.vertex_array().T)) - float(np.sum(rewards * actions))
    poly = polytope_swap_regret(P, rewards, actions).value
    lin = linear_swap_regret(P, rewards, actions).value
    integral = integral_linear_swap_regret(P, rewards, actions).value
    assert poly >= lin - 1e-7
    assert lin >= integral - 1e-7
    assert lin >= best_vertex - 1e-7
    assert integral >= best_vertex - 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_integral_linear_swap_is_swap_regret_on_a_simplex(seed: int) -> None:
    rewards, actions = _random_simplex_transcript(seed)
    report = integral_linear_swap_regret(simplex(3), rewards, actions)
    assert report.notion == "integral_linear_swap"
    assert report.value == pytest.approx(swap_regret(rewards, actions).value, abs=1e-10)
    assert swap_gain(rewards, actions, report.witness["mapping"]) == pytest.approx(report.value, abs=1e-10)


def test_contextual_swap_diagnostics_include_integral_contractions() -> None:
    instance, trajectory = separation_instance(8)
    diagnostics = contextual_swap_diagnostics(instance.P, [0.5, 0.5], instance.rewards, trajectory)
    assert diagnostics.integral_linear_swap is not None
    assert diagnostics.integral_linear_swap.value <= diagnostics.linear_swap.value + 1e-7
    assert diagnostics.to_dict()["integral_linear_swap"]["notion"] == "integral_linear_swap"
