"""Game types, utility evaluation, conversions to polytope games, and I/O.

Standard and Bayesian games convert into polytope games. In the Bayesian
case the learner's strategy is a C x N row-stochastic matrix, flattened
context-major into a point of Delta([N])^C, and every reward coordinate is
scaled by the context probability p_c.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .config import DISTRIBUTION_TOL, MEMBERSHIP_TOL
from .errors import PointNotInPolytopeError, RewardOutOfRangeError, ShapeError
from .geometry import Polytope, simplex, simplex_product

LOGGER = logging.getLogger(__name__)


def _bounded(array: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(array, dtype=float)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries")
    if arr.size and np.max(np.abs(arr)) > 1.0 + DISTRIBUTION_TOL:
        raise RewardOutOfRangeError(f"{name} has entries outside [-1, 1] (max |u| = {np.max(np.abs(arr)):.6g})")
    arr.setflags(write=False)
    return arr


def _distribution(values: Any, size: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (size,):
        raise ShapeError(f"{name} has shape {arr.shape}, expected ({size},)")
    if np.any(arr < -DISTRIBUTION_TOL) or abs(arr.sum() - 1.0) > 1e-9:
        raise ShapeError(f"{name} is not a probability distribution")
    return arr


@dataclass(frozen=True, eq=False)
class StandardGame:
    u_O: np.ndarray
    u_L: np.ndarray

    def __post_init__(self) -> None:
        u_O = _bounded(self.u_O, 2, "u_O")
        u_L = _bounded(self.u_L, 2, "u_L")
        if u_O.shape != u_L.shape:
            raise ShapeError(f"u_O {u_O.shape} and u_L {u_L.shape} must share a shape")
        object.__setattr__(self, "u_O", u_O)
        object.__setattr__(self, "u_L", u_L)

    @property
    def M(self) -> int:
        return int(self.u_O.shape[0])

    @property
    def N(self) -> int:
        return int(self.u_O.shape[1])


@dataclass(frozen=True, eq=False)
class BayesianGame:
    """Per-context bimatrix game; tensors are indexed [i, j, c]."""

    p: np.ndarray
    u_O: np.ndarray
    u_L: np.ndarray

    def __post_init__(self) -> None:
        u_O = _bounded(self.u_O, 3, "u_O")
        u_L = _bounded(self.u_L, 3, "u_L")
        if u_O.shape != u_L.shape:
            raise ShapeError(f"u_O {u_O.shape} and u_L {u_L.shape} must share a shape")
        p = np.array(self.p, dtype=float)
        if p.shape != (u_O.shape[2],):
            raise ShapeError(f"p has shape {p.shape}, expected ({u_O.shape[2]},)")
        if np.any(p < 0) or abs(p.sum() - 1.0) > DISTRIBUTION_TOL:
            raise ShapeError("p must be a probability vector summing to 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u_O", u_O)
        object.__setattr__(self, "u_L", u_L)

    @property
    def M(self) -> int:
        return int(self.u_O.shape[0])

    @property
    def N(self) -> int:
        return int(self.u_O.shape[1])

    @property
    def C(self) -> int:
        return int(self.u_O.shape[2])

    def context_slice(self, c: int) -> StandardGame:
        """The standard game played in context c."""
        return StandardGame(u_O=self.u_O[:, :, c], u_L=self.u_L[:, :, c])


@dataclass(frozen=True, eq=False)
class PolytopeGame:
    """Learner picks x in P, optimizer picks (r, s) in conv of the Q vertex pairs.

    `R[i]` and `S[i]` are the learner and optimizer reward vectors of Q
    vertex i.
    """

    P: Polytope
    R: np.ndarray
    S: np.ndarray

    def __post_init__(self) -> None:
        R = _bounded(self.R, 2, "R")
        S = _bounded(self.S, 2, "S")
        if R.shape != S.shape or R.shape[1] != self.P.dim:
            raise ShapeError(f"Q vertex arrays {R.shape}/{S.shape} do not match dim {self.P.dim}")
        if R.shape[0] < 1:
            raise ShapeError("A polytope game needs at least one Q vertex")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "S", S)

    @property
    def n_q(self) -> int:
        return int(self.R.shape[0])

    @property
    def dim(self) -> int:
        return self.P.dim

    def reward(self, q_weights: Any) -> np.ndarray:
        """Learner reward vector r induced by mixed optimizer weights."""
        return _distribution(q_weights, self.n_q, "q_weights") @ self.R

    def optimizer_vector(self, q_weights: Any) -> np.ndarray:
        return _distribution(q_weights, self.n_q, "q_weights") @ self.S


GameLike = Union[StandardGame, BayesianGame, PolytopeGame]


def standard_utility(G: StandardGame, alpha: Any, beta: Any) -> Tuple[float, float]:
    """Bilinear expected utilities (u_O, u_L) of the profile (alpha, beta)."""
    a = _distribution(alpha, G.M, "alpha")
    b = _distribution(beta, G.N, "beta")
    return float(a @ G.u_O @ b), float(a @ G.u_L @ b)


def bayesian_utility(G: BayesianGame, alpha: Any, beta: Any) -> Tuple[float, float]:
    """Context-weighted utilities; beta is a C x N row-stochastic matrix."""
    a = _distribution(alpha, G.M, "alpha")
    b = np.asarray(beta, dtype=float)
    if b.shape != (G.C, G.N):
        raise ShapeError(f"beta has shape {b.shape}, expected ({G.C}, {G.N})")
    for c in range(G.C):
        _distribution(b[c], G.N, f"beta[{c}]")
    u_O = np.einsum("c,i,cj,ijc->", G.p, a, b, G.u_O)
    u_L = np.einsum("c,i,cj,ijc->", G.p, a, b, G.u_L)
    return float(u_O), float(u_L)


def standard_to_polytope(G: StandardGame) -> PolytopeGame:
    """P = Delta([N]); Q vertex i pairs row i of u_L with row i of u_O."""
    return PolytopeGame(P=simplex(G.N), R=G.u_L.copy(), S=G.u_O.copy())


def bayesian_to_polytope(G: BayesianGame) -> PolytopeGame:
    """P = Delta([N])^C with r_{i,(c,j)} = p_c u_L(i, j, c) and likewise for s."""
    P = simplex_product(G.N, G.C)
    # [i, j, c] -> [i, c, j] so that coordinate c*N + j is context-major.
    R = (np.transpose(G.u_L, (0, 2, 1)) * G.p[None, :, None]).reshape(G.M, G.N * G.C)
    S = (np.transpose(G.u_O, (0, 2, 1)) * G.p[None, :, None]).reshape(G.M, G.N * G.C)
    return PolytopeGame(P=P, R=R, S=S)


def polytope_utility(G: PolytopeGame, q_weights: Any, x: Any) -> Tuple[float, float]:
    point = np.asarray(x, dtype=float)
    if not G.P.contains(point):
        raise PointNotInPolytopeError("Learner point lies outside P")
    return float(G.optimizer_vector(q_weights) @ point), float(G.reward(q_weights) @ point)


@dataclass(frozen=True, eq=False)
class Transcript:
    """Frozen record of a T-round match.

    Arrays are indexed by round: `q_weights` (T x |Q|), `x` and `r`
    (T x d), `u_O` and `u_L` (T,).
    """

    q_weights: np.ndarray
    x: np.ndarray
    r: np.ndarray
    u_O: np.ndarray
    u_L: np.ndarray
    game: Optional[PolytopeGame] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("q_weights", "x", "r", "u_O", "u_L"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        T = arrays["u_O"].shape[0]
        if T < 1:
            raise ShapeError("A transcript needs at least one round")
        if any(arr.shape[0] != T for arr in arrays.values()):
            raise ShapeError("Transcript columns have inconsistent lengths")
        if arrays["x"].shape != arrays["r"].shape:
            raise ShapeError("Learner points and reward vectors must share a shape")

    @property
    def T(self) -> int:
        return int(self.u_O.shape[0])

    @property
    def optimizer_total(self) -> float:
        return float(np.sum(self.u_O))

    @property
    def optimizer_average(self) -> float:
        return self.optimizer_total / self.T

    def validate(self, game: Optional[PolytopeGame] = None, tol: float = MEMBERSHIP_TOL) -> None:
        """Check membership of every x^t and that stored utilities recompute."""
        game = game or self.game
        recomputed_L = np.einsum("td,td->t", self.r, self.x)
        if np.max(np.abs(recomputed_L - self.u_L)) > tol:
            raise ShapeError("Stored learner utilities do not match <r^t, x^t>")
        if game is None:
            return
        for t, point in enumerate(self.x, start=1):
            if not game.P.contains(point, tol):
                raise PointNotInPolytopeError(f"Learner point at round {t} lies outside P")
        recomputed_O = np.einsum("tk,kd,td->t", self.q_weights, game.S, self.x)
        if np.max(np.abs(recomputed_O - self.u_O)) > tol:
            raise ShapeError("Stored optimizer utilities do not match <s^t, x^t>")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": np.arange(1, self.T + 1),
                "q_weights": [json.dumps(row.tolist()) for row in self.q_weights],
                "x": [json.dumps(row.tolist()) for row in self.x],
                "u_O": self.u_O,
                "u_L": self.u_L,
                "r": [json.dumps(row.tolist()) for row in self.r],
            }
        )

    def write_csv(self, path: Path) -> None:
        """Persist the transcript to CSV, ensuring the parent directory exists."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def read_csv(cls, path: Path, game: Optional[PolytopeGame] = None) -> "Transcript":
        frame = pd.read_csv(path).sort_values("t")
        missing = {"t", "q_weights", "x", "u_O", "u_L", "r"} - set(frame.columns)
        if missing:
            raise ShapeError(f"Transcript CSV is missing columns: {', '.join(sorted(missing))}")
        return cls(
            q_weights=np.array([json.loads(cell) for cell in frame["q_weights"]], dtype=float),
            x=np.array([json.loads(cell) for cell in frame["x"]], dtype=float),
            r=np.array([json.loads(cell) for cell in frame["r"]], dtype=float),
            u_O=frame["u_O"].to_numpy(dtype=float),
            u_L=frame["u_L"].to_numpy(dtype=float),
            game=game,
        )


class TranscriptBuilder:
    """Append-only buffer used by the match loop; `freeze` yields the Transcript."""

    def __init__(self, game: PolytopeGame) -> None:
        self.game = game
        self._q: List[np.ndarray] = []
        self._x: List[np.ndarray] = []
        self._r: List[np.ndarray] = []
        self._u_O: List[float] = []
        self._u_L: List[float] = []

    def __len__(self) -> int:
        return len(self._u_O)

    def append(self, q_weights: np.ndarray, x: np.ndarray, r: np.ndarray) -> Tuple[float, float]:
        s = q_weights @ self.game.S
        u_O, u_L = float(s @ x), float(r @ x)
        self._q.append(np.array(q_weights, dtype=float))
        self._x.append(np.array(x, dtype=float))
        self._r.append(np.array(r, dtype=float))
        self._u_O.append(u_O)
        self._u_L.append(u_L)
        return u_O, u_L

    def freeze(self, metadata: Optional[Dict[str, Any]] = None) -> Transcript:
        return Transcript(
            q_weights=np.vstack(self._q),
            x=np.vstack(self._x),
            r=np.vstack(self._r),
            u_O=np.array(self._u_O),
            u_L=np.array(self._u_L),
            game=self.game,
            metadata=dict(metadata or {}),
        )


def game_to_dict(G: GameLike) -> Dict[str, Any]:
    if isinstance(G, StandardGame):
        return {"type": "standard", "u_O": G.u_O.tolist(), "u_L": G.u_L.tolist()}
    if isinstance(G, BayesianGame):
        return {"type": "bayesian", "p": G.p.tolist(), "u_O": G.u_O.tolist(), "u_L": G.u_L.tolist()}
    return {"type": "polytope", "polytope": G.P.to_dict(), "r": G.R.tolist(), "s": G.S.tolist()}


def game_from_dict(payload: Mapping[str, Any]) -> GameLike:
    kind = payload.get("type")
    if kind == "standard":
        return StandardGame(u_O=payload["u_O"], u_L=payload["u_L"])
    if kind == "bayesian":
        return BayesianGame(p=payload["p"], u_O=payload["u_O"], u_L=payload["u_L"])
    if kind == "polytope":
        return PolytopeGame(P=Polytope.from_dict(payload["polytope"]), R=payload["r"], S=payload["s"])
    raise ShapeError(f"Unknown game type {kind!r}; expected standard, bayesian or polytope")


def to_polytope_game(G: GameLike) -> PolytopeGame:
    if isinstance(G, StandardGame):
        return standard_to_polytope(G)
    if isinstance(G, BayesianGame):
        return bayesian_to_polytope(G)
    return G


def load_game(path: Path) -> GameLike:
    return game_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_game(G: GameLike, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(game_to_dict(G), indent=2), encoding="utf-8")


__all__ = [
    "BayesianGame",
    "GameLike",
    "PolytopeGame",
    "StandardGame",
    "Transcript",
    "TranscriptBuilder",
    "bayesian_to_polytope",
    "bayesian_utility",
    "game_from_dict",
    "game_to_dict",
    "load_game",
    "polytope_utility",
    "save_game",
    "standard_to_polytope",
    "standard_utility",
    "to_polytope_game",
]
