from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iteration_limit"


class SolveError(RuntimeError):
    """Raised by callers that need an optimal solution and did not get one."""

    def __init__(self, status: Status, context: str = ""):
        super().__init__(f"{context + ': ' if context else ''}LP status {status.value}")
        self.status = status


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Result of a solve.

    ``y`` are row duals and ``d = c - A^T y`` reduced costs, with the sign
    convention of a minimization: ``y <= 0`` on ``<=`` rows and ``y >= 0``
    on ``>=`` rows. ``farkas`` (infeasible) is a row vector proving
    infeasibility; ``ray`` (unbounded) is an improving primal direction.
    """

    status: Status
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    d: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    method: str = ""
    farkas: np.ndarray | None = None
    ray: np.ndarray | None = None
    basic: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def require_optimal(self, context: str = "") -> "LpSolution":
        if not self.optimal:
            raise SolveError(self.status, context)
        return self
