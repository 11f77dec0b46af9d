"""Thin wrapper over `scipy.optimize.linprog` (HiGHS) used by every solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .config import DEFAULT_SETTINGS, LabSettings
from .errors import LabError, LPInfeasibleError

LOGGER = logging.getLogger(__name__)

_STATUS_TEXT = {
    0: "optimal",
    1: "iteration limit reached",
    2: "infeasible",
    3: "unbounded",
    4: "numerical difficulties",
}


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: int


def solve_lp(
    c: np.ndarray,
    *,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    bounds=(0, None),
    maximize: bool = False,
    label: str = "lp",
    allow_infeasible: bool = False,
    settings: LabSettings = DEFAULT_SETTINGS,
) -> Optional[LPSolution]:
    """Solve a linear program; returns None for infeasible LPs when allowed.

    `objective` is reported in the caller's sense, i.e. already negated back
    when `maximize` is set.
    """
    c = np.asarray(c, dtype=float)
    result = linprog(
        -c if maximize else c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options=settings.highs_options(),
    )
    LOGGER.debug("%s: status=%s (%s)", label, result.status, _STATUS_TEXT.get(result.status, "unknown"))
    if result.status == 2:
        if allow_infeasible:
            return None
        raise LPInfeasibleError(f"{label}: linear program is infeasible")
    if result.status != 0:
        raise LabError(f"{label}: solver stopped with status {result.status} ({result.message})")
    objective = float(-result.fun if maximize else result.fun)
    return LPSolution(x=np.asarray(result.x, dtype=float), objective=objective, status=int(result.status))


__all__ = ["LPSolution", "solve_lp"]
