"""Match loop, experiment configuration and one-command reproduction of the lab's claims.

`run_match` turns a `MatchConfig` (game, learner and optimizer by name plus
parameters) into a frozen `Transcript`. `reproduce` runs one registered case
end-to-end, compares the measured quantities with their expected values,
and writes a JSON report; `reproduce_all` runs every case, optionally on a
thread pool.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_SETTINGS, REPORTS_DIR, LabSettings
from .equilibria import (
    ce_violation,
    corr_val,
    hardness_value,
    min_dominating_set,
    per_context_val,
    stackelberg_bayesian,
    stackelberg_polytope,
    verify_correlated,
    verify_stackelberg,
)
from .errors import BadHorizonError, LabError, UnknownCaseError, UnknownComponentError
from .games import (
    BayesianGame,
    GameLike,
    PolytopeGame,
    Transcript,
    TranscriptBuilder,
    load_game,
    to_polytope_game,
)
from .generators import (
    SEPARATION_SCHEDULE_AVERAGE,
    SEPARATION_VALUE,
    Graph,
    LearningInstance,
    contraction_scale,
    cycling_instance,
    dominating_set_game,
    exact_schedule,
    lemma1_game,
    lemma_linear_game,
    path_graph,
    petersen_graph,
    random_bayesian_game,
    random_polytope_game,
    random_standard_game,
    selling_game,
    separation_game,
    separation_instance,
    single_edge,
    small_graphs,
    triangle,
)
from .geometry import simplex, simplex_product
from .learners import (
    BlumMansourLearner,
    ContextSwapLearner,
    FixedPointProblem,
    HedgeLearner,
    Learner,
    PerContextLearner,
    ScriptedLearner,
    VertexLiftedLearner,
    fixed_point_iterate,
)
from .optimizers import (
    Optimizer,
    exact_replay_total,
    perturbed_stackelberg,
    replay_exploit,
    static_strategy,
    two_phase_price,
)
from .regret import (
    brute_force_polytope_swap_regret,
    brute_force_swap_regret,
    linear_swap_regret,
    polytope_swap_regret,
    swap_regret,
)

LOGGER = logging.getLogger(__name__)

ProgressCallback = Callable[[str, float], None]


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class MatchConfig:
    """One match: components are `{"name": ..., "params": {...}}` mappings."""

    game: Dict[str, Any]
    learner: Dict[str, Any]
    optimizer: Dict[str, Any]
    T: int
    seed: Optional[int] = None
    transcript_path: Optional[Path] = None
    summary_path: Optional[Path] = None

    def __post_init__(self) -> None:
        if int(self.T) < 1:
            raise BadHorizonError(f"T must be at least 1, got {self.T}")
        self.T = int(self.T)
        for role in ("game", "learner", "optimizer"):
            spec = getattr(self, role)
            if not isinstance(spec, Mapping) or "name" not in spec:
                raise UnknownComponentError(f"{role} must be a mapping with a 'name' entry")
        if self.transcript_path is not None:
            self.transcript_path = Path(self.transcript_path)
        if self.summary_path is not None:
            self.summary_path = Path(self.summary_path)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "MatchConfig":
        return cls(
            game=dict(payload["game"]),
            learner=dict(payload["learner"]),
            optimizer=dict(payload["optimizer"]),
            T=int(payload["T"]),
            seed=payload.get("seed"),
            transcript_path=payload.get("transcript_path"),
            summary_path=payload.get("summary_path"),
        )

    @classmethod
    def from_json(cls, path: Path) -> "MatchConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        for key in ("transcript_path", "summary_path"):
            if payload[key] is not None:
                payload[key] = str(payload[key])
        return payload


@dataclass
class GameBundle:
    """A constructed game plus whatever its construction hands to the other components."""

    source: GameLike
    game: PolytopeGame
    schedule: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = None
    info: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Recorded learner runs used by the adversarial constructions


def record_actions(learner: Learner, instance: LearningInstance) -> np.ndarray:
    """Run a learner against a fixed reward sequence and return its points."""
    actions = []
    for reward in instance.rewards:
        actions.append(np.array(learner.act(), dtype=float))
        learner.observe(reward)
    return np.vstack(actions)


def lemma1_pipeline(rng: np.random.Generator, N: int = 3, T: int = 1000) -> Dict[str, Any]:
    """Hedge on a cycling instance over the simplex, then the swap-regret exploit game."""
    instance = cycling_instance(simplex(N), T, rng)
    actions = record_actions(HedgeLearner(N, T), instance)
    report = swap_regret(instance.rewards, actions)
    game, schedule = lemma1_game(instance, actions, report.witness["pi"])
    return {"instance": instance, "actions": actions, "report": report, "game": game, "schedule": schedule}


def lemma_linear_pipeline(rng: np.random.Generator, T: int = 1000) -> Dict[str, Any]:
    """Per-context Hedge over Delta([2])^2, then the linear-swap-regret exploit game."""
    P = simplex_product(2, 2)
    instance = cycling_instance(P, T, rng)
    actions = record_actions(PerContextLearner(2, 2, T, inner="hedge"), instance)
    report = linear_swap_regret(P, instance.rewards, actions)
    game, schedule = lemma_linear_game(instance, actions, report.witness["M"])
    return {
        "instance": instance,
        "actions": actions,
        "report": report,
        "game": game,
        "schedule": schedule,
        "scale": contraction_scale(report.witness["M"]),
    }


# ---------------------------------------------------------------------------
# Component registries


def _graph_from_params(params: Mapping[str, Any]) -> Graph:
    if params.get("graph_file"):
        return Graph.parse(Path(params["graph_file"]).read_text(encoding="utf-8"))
    named = params.get("graph", "single_edge")
    if isinstance(named, Mapping):
        return Graph.from_edges(int(named["V"]), [tuple(edge) for edge in named["edges"]])
    if named == "single_edge":
        return single_edge()
    if named == "triangle":
        return triangle()
    if named == "petersen":
        return petersen_graph()
    if named == "path":
        return path_graph(int(params.get("V", 3)))
    raise UnknownComponentError(f"Unknown graph {named!r}; expected single_edge, triangle, petersen, path or an edge list")


def _rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(0 if seed is None else seed)


def _game_selling(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    G = selling_game()
    return GameBundle(source=G, game=to_polytope_game(G))


def _game_separation(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    game, schedule, learner = separation_game(T)
    return GameBundle(source=game, game=game, schedule=schedule, trajectory=learner.trajectory)


def _game_dominating_set(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    G = dominating_set_game(_graph_from_params(params), type_bonus=bool(params.get("type_bonus", False)))
    return GameBundle(source=G, game=to_polytope_game(G))


def _game_lemma1(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    run = lemma1_pipeline(_rng(seed), N=int(params.get("N", 3)), T=T)
    return GameBundle(
        source=run["game"],
        game=to_polytope_game(run["game"]),
        schedule=run["schedule"],
        trajectory=run["actions"],
        info={"swap_regret": run["report"].value, "pi": run["report"].witness["pi"]},
    )


def _game_lemma_linear(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    run = lemma_linear_pipeline(_rng(seed), T=T)
    return GameBundle(
        source=run["game"],
        game=run["game"],
        schedule=run["schedule"],
        trajectory=run["actions"],
        info={"linear_swap_regret": run["report"].value, "scale": run["scale"]},
    )


def _game_random(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    rng = _rng(seed)
    kind = params.get("kind", "standard")
    M, N, C = int(params.get("M", 3)), int(params.get("N", 3)), int(params.get("C", 2))
    if kind == "standard":
        G: GameLike = random_standard_game(M, N, rng)
    elif kind == "bayesian":
        G = random_bayesian_game(M, N, C, rng)
    elif kind == "polytope":
        G = random_polytope_game(simplex_product(N, C), int(params.get("n_q", M)), rng)
    else:
        raise UnknownComponentError(f"Unknown random game kind {kind!r}")
    return GameBundle(source=G, game=to_polytope_game(G))


def _game_file(params: Mapping[str, Any], T: int, seed: Optional[int]) -> GameBundle:
    G = load_game(Path(params["path"]))
    return GameBundle(source=G, game=to_polytope_game(G))


GAMES: Dict[str, Callable[[Mapping[str, Any], int, Optional[int]], GameBundle]] = {
    "selling": _game_selling,
    "separation": _game_separation,
    "dominating_set": _game_dominating_set,
    "lemma1": _game_lemma1,
    "lemma_linear": _game_lemma_linear,
    "random": _game_random,
    "file": _game_file,
}


def _context_layout(bundle: GameBundle, params: Mapping[str, Any]) -> Tuple[int, int, Optional[np.ndarray]]:
    if isinstance(bundle.source, BayesianGame):
        return bundle.source.N, bundle.source.C, bundle.source.p
    structure = bundle.game.P.structure
    if structure is None:
        raise UnknownComponentError("Contextual learners need a game over a product of simplices")
    p = params.get("p")
    return structure.N, structure.C, None if p is None else np.asarray(p, dtype=float)


def _simplex_size(bundle: GameBundle) -> int:
    structure = bundle.game.P.structure
    if structure is None or structure.C != 1:
        raise UnknownComponentError("This learner plays over a single simplex")
    return structure.N


def build_learner(spec: Mapping[str, Any], bundle: GameBundle, T: int, settings: LabSettings = DEFAULT_SETTINGS) -> Learner:
    name = spec["name"]
    params = spec.get("params", {}) or {}
    if name == "hedge":
        return HedgeLearner(_simplex_size(bundle), T)
    if name == "blum_mansour":
        return BlumMansourLearner(_simplex_size(bundle), T, settings)
    if name == "vertex_lifted":
        return VertexLiftedLearner(bundle.game.P, T, settings)
    if name == "per_context":
        N, C, p = _context_layout(bundle, params)
        return PerContextLearner(N, C, T, p=p, inner=params.get("inner", "blum_mansour"), settings=settings)
    if name == "context_swap":
        N, C, p = _context_layout(bundle, params)
        return ContextSwapLearner(
            N,
            C,
            T,
            p=p,
            tol=float(params.get("tol", settings.fixed_point_tol)),
            max_iters=int(params.get("max_iters", settings.fixed_point_max_iters)),
        )
    if name == "scripted":
        trajectory = params.get("trajectory", bundle.trajectory)
        if trajectory is None:
            raise UnknownComponentError("The scripted learner needs a trajectory")
        return ScriptedLearner(bundle.game.P, trajectory)
    raise UnknownComponentError(
        f"Unknown learner {name!r}; expected hedge, blum_mansour, vertex_lifted, per_context, context_swap or scripted"
    )


def build_optimizer(
    spec: Mapping[str, Any], bundle: GameBundle, T: int, settings: LabSettings = DEFAULT_SETTINGS
) -> Optimizer:
    name = spec["name"]
    params = spec.get("params", {}) or {}
    if name == "static":
        if params.get("stackelberg"):
            return static_strategy(stackelberg_polytope(bundle.game, settings=settings).strategy)
        return static_strategy(params["weights"])
    if name == "perturbed_stackelberg":
        return perturbed_stackelberg(bundle.game, params.get("regret_bound"), T, settings=settings)
    if name == "replay":
        schedule = params.get("schedule", bundle.schedule)
        if schedule is None:
            raise UnknownComponentError("The replay optimizer needs a schedule")
        return replay_exploit(schedule)
    if name == "two_phase_price":
        return two_phase_price(T)
    raise UnknownComponentError(
        f"Unknown optimizer {name!r}; expected static, perturbed_stackelberg, replay or two_phase_price"
    )


def build_game(spec: Mapping[str, Any], T: int, seed: Optional[int] = None) -> GameBundle:
    name = spec["name"]
    if name not in GAMES:
        raise UnknownComponentError(f"Unknown game {name!r}; expected one of {', '.join(sorted(GAMES))}")
    return GAMES[name](spec.get("params", {}) or {}, T, seed)


# ---------------------------------------------------------------------------
# Match loop


def play(
    game: PolytopeGame,
    learner: Learner,
    optimizer: Optimizer,
    T: int,
    *,
    progress_cb: Optional[ProgressCallback] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Transcript:
    """Alternate optimizer and learner for T rounds with full-information feedback.

    The learner is shown r^t = sum_i alpha^t_i r_i, the exact expectation of
    the optimizer's mixed play.
    """
    if optimizer.n_q != game.n_q:
        raise UnknownComponentError(f"Optimizer plays over {optimizer.n_q} Q vertices, the game has {game.n_q}")
    if learner.polytope.dim != game.dim:
        raise UnknownComponentError(f"Learner plays in dimension {learner.polytope.dim}, the game has {game.dim}")
    if learner.horizon < T:
        raise BadHorizonError(f"Learner horizon {learner.horizon} is shorter than the match length {T}")
    builder = TranscriptBuilder(game)
    history: List[np.ndarray] = []
    step = max(1, T // 20)
    for t in range(1, T + 1):
        q = np.asarray(optimizer.act(t, history), dtype=float)
        x = np.asarray(learner.act(), dtype=float)
        r = game.reward(q)
        builder.append(q, x, r)
        learner.observe(r)
        history.append(x)
        if progress_cb is not None and (t % step == 0 or t == T):
            progress_cb(f"round {t}/{T}", t / T)
    info = dict(metadata or {})
    info.update(learner.metadata())
    info["optimizer"] = optimizer.describe()
    return builder.freeze(info)


def run_match(
    config: MatchConfig,
    *,
    settings: LabSettings = DEFAULT_SETTINGS,
    progress_cb: Optional[ProgressCallback] = None,
) -> Transcript:
    bundle = build_game(config.game, config.T, config.seed)
    learner = build_learner(config.learner, bundle, config.T, settings)
    optimizer = build_optimizer(config.optimizer, bundle, config.T, settings)
    LOGGER.info(
        "run_match: game=%s learner=%s optimizer=%s T=%s",
        config.game["name"],
        config.learner["name"],
        config.optimizer["name"],
        config.T,
    )
    transcript = play(
        bundle.game,
        learner,
        optimizer,
        config.T,
        progress_cb=progress_cb,
        metadata={"config": config.to_dict(), **bundle.info},
    )
    if config.transcript_path is not None:
        transcript.write_csv(config.transcript_path)
    if config.summary_path is not None:
        summary = {
            "status": "ok",
            "T": transcript.T,
            "optimizer_total": transcript.optimizer_total,
            "optimizer_average": transcript.optimizer_average,
            "learner_average": float(np.mean(transcript.u_L)),
            "metadata": transcript.metadata,
        }
        config.summary_path.parent.mkdir(parents=True, exist_ok=True)
        config.summary_path.write_text(json.dumps(summary, indent=2, default=str), encoding="utf-8")
    return transcript


# ---------------------------------------------------------------------------
# Reproduction cases


@dataclass
class Check:
    name: str
    measured: float
    expected: str
    passed: bool


def _close(name: str, measured: float, expected: float, tol: float) -> Check:
    return Check(name, float(measured), f"{expected:.12g} +/- {tol:.0e}", bool(abs(measured - expected) <= tol))


def _at_most(name: str, measured: float, bound: float) -> Check:
    return Check(name, float(measured), f"<= {bound:.12g}", bool(measured <= bound))


def _at_least(name: str, measured: float, bound: float) -> Check:
    return Check(name, float(measured), f">= {bound:.12g}", bool(measured >= bound))


def _flag(name: str, ok: bool) -> Check:
    return Check(name, float(ok), "true", bool(ok))


@dataclass(frozen=True)
class Case:
    case_id: str
    anchor: str
    run: Callable[[int], List[Check]]


def _case_separation(workers: int, T: int = 40, oracle_T: int = 8) -> List[Check]:
    instance, trajectory = separation_instance(T)
    poly = polytope_swap_regret(instance.P, instance.rewards, trajectory)
    lin = linear_swap_regret(instance.P, instance.rewards, trajectory)
    small, small_trajectory = separation_instance(oracle_T)
    oracle = brute_force_polytope_swap_regret(small.P, small.rewards, small_trajectory)
    return [
        _close("polytope_swap_regret", poly.value, T / 2, 1e-8),
        _at_most("linear_swap_regret", lin.value, 1e-9),
        _close("grid_oracle_small_T", oracle, oracle_T / 2, 0.02),
    ]


def _case_separation_game(workers: int, T: int = 40) -> List[Check]:
    game, schedule, learner = separation_game(T)
    value = stackelberg_polytope(game, workers=workers).value
    transcript = play(game, learner, replay_exploit(schedule), T)
    lin = linear_swap_regret(game.P, transcript.r, transcript.x)
    return [
        _close("stackelberg_value", value, SEPARATION_VALUE, 1e-6),
        _close("replay_average", transcript.optimizer_average, SEPARATION_SCHEDULE_AVERAGE, 1e-9),
        _at_most("learner_linear_swap_regret", lin.value, 1e-9),
    ]


def _exact_swap_gain(instance: LearningInstance, actions: np.ndarray, pi: Sequence[int]) -> Fraction:
    total = Fraction(0)
    for reward, point in zip(instance.rewards, actions):
        r = [Fraction(float(v)) for v in reward]
        for j, weight in enumerate(point):
            if weight:
                total += Fraction(float(weight)) * (r[pi[j]] - r[j])
    return total


def _case_swap_exploit(workers: int, runs: int = 10, N: int = 3, T: int = 1000) -> List[Check]:
    checks: List[Check] = []
    collected = 0
    for seed in range(10 * runs):
        if collected == runs:
            break
        run = lemma1_pipeline(np.random.default_rng(seed), N=N, T=T)
        R = run["report"].value
        if R <= 1e-6:
            continue
        collected += 1
        game = run["game"]
        pgame = to_polytope_game(game)
        value = stackelberg_polytope(pgame, workers=workers).value
        transcript = play(pgame, HedgeLearner(N, T), replay_exploit(run["schedule"]), T)
        exact_total = exact_replay_total(game.u_O, exact_schedule(run["instance"]), run["actions"])
        exact_R = _exact_swap_gain(run["instance"], run["actions"], run["report"].witness["pi"])
        checks.append(_at_most(f"seed{seed}_retrace_error", float(np.max(np.abs(transcript.x - run["actions"]))), 1e-9))
        checks.append(_at_most(f"seed{seed}_stackelberg_value", value, 1e-9))
        checks.append(_close(f"seed{seed}_replay_total", transcript.optimizer_total, R / 2, 1e-8))
        checks.append(_flag(f"seed{seed}_exact_total_is_half_regret", exact_total == exact_R / 2))
    checks.append(_close("runs_with_positive_regret", collected, runs, 0))
    return checks


def _case_linear_swap_exploit(workers: int, runs: int = 10, T: int = 1000) -> List[Check]:
    checks: List[Check] = []
    collected = 0
    for seed in range(10 * runs):
        if collected == runs:
            break
        run = lemma_linear_pipeline(np.random.default_rng(seed), T=T)
        R = run["report"].value
        if R <= 1e-6:
            continue
        collected += 1
        game = run["game"]
        value = stackelberg_polytope(game, workers=workers).value
        learner = PerContextLearner(2, 2, T, inner="hedge")
        transcript = play(game, learner, replay_exploit(run["schedule"]), T)
        checks.append(_at_most(f"seed{seed}_retrace_error", float(np.max(np.abs(transcript.x - run["actions"]))), 1e-9))
        checks.append(_at_most(f"seed{seed}_stackelberg_value", value, 1e-9))
        checks.append(_close(f"seed{seed}_replay_total", transcript.optimizer_total, R / (run["scale"] + 1.0), 1e-8))
    checks.append(_close("runs_with_positive_regret", collected, runs, 0))
    return checks


def _case_selling_values(workers: int) -> List[Check]:
    G = selling_game()
    val = stackelberg_bayesian(G, workers=workers).value
    per_con = per_context_val(G)
    corr = corr_val(G)
    return [
        _close("val", val, 0.25, 1e-9),
        _close("per_con_val", per_con, 0.375, 1e-9),
        _close("corr_val", corr.value, 0.25, 1e-8),
        _flag("corr_val_certificate", verify_correlated(G, corr)),
    ]


def _selling_match(learner: Learner, optimizer: Optimizer, T: int) -> Transcript:
    G = selling_game()
    return play(to_polytope_game(G), learner, optimizer, T)


def _case_selling(workers: int, T: int = 20000) -> List[Check]:
    G = selling_game()
    game = to_polytope_game(G)
    exploit = _selling_match(PerContextLearner(2, 2, T, p=G.p, inner="hedge"), two_phase_price(T), T)
    committed = _selling_match(PerContextLearner(2, 2, T, p=G.p, inner="hedge"), perturbed_stackelberg(game, None, T), T)
    per_con = per_context_val(G)
    return [
        _at_least("two_phase_average", exploit.optimizer_average, 0.32),
        _at_most("two_phase_average_vs_perconval", exploit.optimizer_average, per_con + 0.02),
        _at_least("perturbed_stackelberg_average", committed.optimizer_average, 0.20),
        _close("per_con_val", per_con, 0.375, 1e-9),
    ]


def _case_context_swap_cap(workers: int, T: int = 20000, T_short: int = 2000) -> List[Check]:
    G = selling_game()
    corr = corr_val(G).value
    long_run = _selling_match(ContextSwapLearner(2, 2, T, p=G.p), two_phase_price(T), T)
    short_run = _selling_match(ContextSwapLearner(2, 2, T_short, p=G.p), two_phase_price(T_short), T_short)
    eps_long = ce_violation(G, long_run)
    eps_short = ce_violation(G, short_run)
    return [
        _at_most("optimizer_average", long_run.optimizer_average, corr + 0.02),
        _at_most("ce_violation_decreases", eps_long - eps_short, 0.0),
        Check("fixed_point_max_residual", float(long_run.metadata.get("fixed_point_max_residual", 0.0)), "< 1e-10",
              float(long_run.metadata.get("fixed_point_max_residual", 0.0)) < 1e-10),
    ]


def _case_vertex_lifted(workers: int, runs: int = 20, T: int = 2000) -> List[Check]:
    P = simplex_product(2, 2)
    bound = 2.0 * np.sqrt(T * 4 * np.log(4))
    checks: List[Check] = []
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        instance = LearningInstance(P=P, rewards=rng.uniform(0.0, 1.0, size=(T, P.dim)))
        learner = VertexLiftedLearner(P, T)
        actions = record_actions(learner, instance)
        arm_rewards, arm_actions = learner.inner_history()
        inner = swap_regret(arm_rewards, arm_actions).value
        poly = polytope_swap_regret(P, instance.rewards, actions).value
        checks.append(_at_most(f"seed{seed}_polytope_vs_inner", poly - inner, 1e-8))
        checks.append(_at_most(f"seed{seed}_inner_swap_regret", inner, bound))
    return checks


def _case_polytope_cap(workers: int, runs: int = 10, T: int = 5000) -> List[Check]:
    checks: List[Check] = []
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        game = random_polytope_game(simplex_product(2, 2), int(rng.integers(2, 5)), rng)
        solution = stackelberg_polytope(game, workers=workers)
        static = play(game, VertexLiftedLearner(game.P, T), static_strategy(solution.strategy), T)
        schedule = rng.dirichlet(np.ones(game.n_q), size=T)
        replayed = play(game, VertexLiftedLearner(game.P, T), replay_exploit(schedule), T)
        checks.append(_at_most(f"seed{seed}_static_average", static.optimizer_average, solution.value + 0.05))
        checks.append(_at_most(f"seed{seed}_replay_average", replayed.optimizer_average, solution.value + 0.05))
    return checks


def _case_regret_equality(workers: int, runs: int = 50, N: int = 3, T: int = 20) -> List[Check]:
    P = simplex(N)
    worst_lin = worst_poly = worst_oracle = 0.0
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        rewards = rng.uniform(-1.0, 1.0, size=(T, N))
        actions = rng.dirichlet(np.ones(N), size=T)
        swap = swap_regret(rewards, actions).value
        worst_lin = max(worst_lin, abs(linear_swap_regret(P, rewards, actions).value - swap))
        worst_poly = max(worst_poly, abs(polytope_swap_regret(P, rewards, actions).value - swap))
        worst_oracle = max(worst_oracle, abs(brute_force_swap_regret(rewards, actions) - swap))
    return [
        _at_most("max_linear_minus_swap", worst_lin, 1e-8),
        _at_most("max_polytope_minus_swap", worst_poly, 1e-8),
        _at_most("max_oracle_minus_swap", worst_oracle, 1e-8),
    ]


def _case_edge_graph(workers: int) -> List[Check]:
    H = single_edge()
    value = stackelberg_bayesian(dominating_set_game(H), workers=workers).value
    bonus = stackelberg_bayesian(dominating_set_game(H, type_bonus=True), workers=workers).value
    return [
        _close("min_dominating_set", min_dominating_set(H), 1, 0),
        _close("val", value, 0.0625, 1e-7),
        _close("val_with_type_bonus", bonus, 0.0625 + 1.0 / (2 * H.V), 1e-7),
    ]


def _case_hardness_family(workers: int, sizes: Sequence[int] = (2, 3)) -> List[Check]:
    checks: List[Check] = []
    for V in sizes:
        for idx, H in enumerate(small_graphs(V)):
            value = stackelberg_bayesian(dominating_set_game(H), workers=workers).value
            checks.append(_close(f"V{V}_graph{idx}_val", value, hardness_value(H), 1e-7))
    return checks


def _case_benchmark_chain(workers: int, runs: int = 50) -> List[Check]:
    worst_low = worst_high = -np.inf
    certificates = True
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        M, N, C = (int(v) for v in rng.integers(1, 4, size=3))
        G = random_bayesian_game(M, N, C, rng)
        stack = stackelberg_bayesian(G)
        corr = corr_val(G)
        per_con = per_context_val(G)
        worst_low = max(worst_low, stack.value - corr.value)
        worst_high = max(worst_high, corr.value - per_con)
        certificates &= verify_stackelberg(to_polytope_game(G), stack) and verify_correlated(G, corr)
    return [
        _at_most("max_val_minus_corr_val", worst_low, 1e-8),
        _at_most("max_corr_val_minus_per_con_val", worst_high, 1e-8),
        _flag("certificates", certificates),
    ]


def _case_fixed_point(workers: int, runs: int = 200) -> List[Check]:
    worst_residual = worst_row = 0.0
    iterations: List[int] = []
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        N, C = (int(v) for v in rng.integers(1, 5, size=2))
        gamma = rng.dirichlet(np.ones(N + C), size=(C, N))
        stats = fixed_point_iterate(FixedPointProblem(gamma))
        worst_residual = max(worst_residual, stats.residual)
        worst_row = max(worst_row, stats.max_row_error)
        iterations.append(stats.plain_iterations + stats.damped_iterations)
    LOGGER.info("fixed-point suite: mean %.1f, max %s iterations", float(np.mean(iterations)), max(iterations))
    return [
        _at_most("max_residual", worst_residual, 1e-10),
        _at_most("max_row_sum_error", worst_row, 1e-12),
        Check("mean_iterations", float(np.mean(iterations)), "recorded", True),
        _at_most("max_iterations", float(max(iterations)), 2 * 10**5),
    ]


CASES: Dict[str, Case] = {
    case.case_id: case
    for case in (
        Case("B1-separation", "polytope swap regret T/2 while linear swap regret vanishes", _case_separation),
        Case("B2-game", "separation game: replay beats Val against a no-linear-swap learner", _case_separation_game),
        Case("Lemma1-pipeline", "swap regret R converts into R/2 optimizer utility", _case_swap_exploit),
        Case("Lemma42-pipeline", "linear swap regret R converts into R/(lambda+1)", _case_linear_swap_exploit),
        Case("C2-selling-val", "selling game values Val, PerConVal and CorrVal", _case_selling_values),
        Case("C2-selling", "per-context learner is exploitable above Val", _case_selling),
        Case("Alg2-cap", "context-swap learner holds the optimizer to CorrVal", _case_context_swap_cap),
        Case("C1-reduction", "vertex-lifted swap regret bounds polytope swap regret", _case_vertex_lifted),
        Case("Thm43-cap", "no-polytope-swap-regret learner caps the optimizer at Val", _case_polytope_cap),
        Case("Regret-equality", "all swap notions coincide on a simplex", _case_regret_equality),
        Case("C6-edge-graph", "dominating-set game on a single edge", _case_edge_graph),
        Case("C6-hardness-family", "Val = (V - D) / (4 V^2) on small graphs", _case_hardness_family),
        Case("Benchmark-chain", "Val <= CorrVal <= PerConVal", _case_benchmark_chain),
        Case("Fixed-point-suite", "context fixed point converges with row-stochastic iterates", _case_fixed_point),
    )
}


def reproduce(
    case_id: str,
    *,
    workers: int = 1,
    report_dir: Optional[Path] = REPORTS_DIR,
) -> Dict[str, Any]:
    """Run one case and return its report; the report is also written as JSON."""
    if case_id not in CASES:
        raise UnknownCaseError(f"Unknown case {case_id!r}; expected one of {', '.join(CASES)}")
    case = CASES[case_id]
    LOGGER.info("reproduce: %s", case_id)
    try:
        checks = case.run(workers)
    except LabError as exc:
        LOGGER.error("reproduce: %s failed with %s", case_id, exc)
        report: Dict[str, Any] = {
            "case": case_id,
            "anchor": case.anchor,
            "status": "error",
            "kind": exc.kind,
            "message": str(exc),
            "passed": False,
            "checks": [],
        }
    else:
        report = {
            "case": case_id,
            "anchor": case.anchor,
            "status": "ok",
            "passed": all(check.passed for check in checks),
            "checks": [asdict(check) for check in checks],
        }
    if report_dir is not None:
        path = Path(report_dir) / f"{case_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=2), encoding="utf-8")
    return report


def reproduce_all(
    *,
    workers: int = 1,
    report_dir: Optional[Path] = REPORTS_DIR,
    progress_cb: Optional[ProgressCallback] = None,
) -> List[Dict[str, Any]]:
    """Run every registered case; with workers > 1 cases run on a thread pool, in registry order."""
    ids = list(CASES)
    if workers <= 1:
        reports = []
        for idx, case_id in enumerate(ids, start=1):
            reports.append(reproduce(case_id, report_dir=report_dir))
            if progress_cb is not None:
                progress_cb(f"{case_id} done", idx / len(ids))
        return reports
    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(executor.map(lambda case_id: reproduce(case_id, report_dir=report_dir), ids))
    if progress_cb is not None:
        progress_cb("all cases done", 1.0)
    return reports


__all__ = [
    "CASES",
    "Case",
    "Check",
    "GAMES",
    "GameBundle",
    "MatchConfig",
    "build_game",
    "build_learner",
    "build_optimizer",
    "lemma1_pipeline",
    "lemma_linear_pipeline",
    "play",
    "record_actions",
    "reproduce",
    "reproduce_all",
    "run_match",
]
