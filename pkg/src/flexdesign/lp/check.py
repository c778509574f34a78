"""Independent verification of solver output."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import EQ, GE, LE, LpProblem
from .solution import LpSolution


@dataclass(frozen=True)
class ResidualReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    duality_gap: float
    objective: float
    objective_mismatch: float

    def ok(self, feas_tol: float = 1e-7, opt_tol: float = 1e-7, scale: float = 1.0) -> bool:
        """Tolerances are absolute for the primal side and relative to ``1 + |obj|`` for the gap.

        ``scale`` multiplies ``opt_tol`` for the dual residual, useful when
        costs are far from unit magnitude.
        """
        return (
            self.primal_residual <= feas_tol
            and self.dual_residual <= opt_tol * scale
            and self.duality_gap <= 1e-6 * (1.0 + abs(self.objective))
            and self.objective_mismatch <= 1e-9 * (1.0 + abs(self.objective))
        )


def row_activity(problem: LpProblem, x) -> np.ndarray:
    return problem.matrix @ np.asarray(x, dtype=float)


def primal_violation(problem: LpProblem, x) -> np.ndarray:
    """Per-row violation (>= 0) of the row senses."""
    r = row_activity(problem, x) - problem.b
    return np.where(problem.senses == LE, np.maximum(r, 0.0),
                    np.where(problem.senses == GE, np.maximum(-r, 0.0), np.abs(r)))


def check_solution(problem: LpProblem, sol: LpSolution, tol: float = 1e-7) -> ResidualReport:
    """Primal/dual residuals and the bound-aware duality gap of ``sol``.

    Reduced costs ``d = c - A^T y`` split into multipliers of the lower
    (``d > 0``) and upper (``d < 0``) bounds. A multiplier on an infinite
    bound is dual infeasibility and goes into ``dual_residual``; the gap
    ``y.(Ax - b) + sum d+ (x - l) + sum d- (u - x)`` runs over finite bounds.
    """
    x, y = np.asarray(sol.x, dtype=float), np.asarray(sol.y, dtype=float)
    lb, ub = problem.lb, problem.ub
    d = problem.c - problem.matrix.T @ y
    rows = primal_violation(problem, x)
    bounds = np.maximum(np.maximum(lb - x, 0.0), np.maximum(x - ub, 0.0))
    primal = float(max(rows.max(initial=0.0), bounds.max(initial=0.0)))

    has_lb, has_ub = np.isfinite(lb), np.isfinite(ub)
    dp, dm = np.maximum(d, 0.0), np.maximum(-d, 0.0)
    ysign = np.where(problem.senses == LE, np.maximum(y, 0.0),
                     np.where(problem.senses == GE, np.maximum(-y, 0.0), 0.0))
    dsign = np.where(has_lb, 0.0, dp) + np.where(has_ub, 0.0, dm)
    dual = float(max(ysign.max(initial=0.0), dsign.max(initial=0.0)))

    row_term = y * (row_activity(problem, x) - problem.b)
    lo_term = np.where(has_lb, dp * (x - np.where(has_lb, lb, 0.0)), 0.0)
    up_term = np.where(has_ub, dm * (np.where(has_ub, ub, 0.0) - x), 0.0)
    comp = float(max(np.abs(row_term).max(initial=0.0), np.abs(lo_term).max(initial=0.0),
                     np.abs(up_term).max(initial=0.0)))
    gap = float(abs(row_term.sum() + lo_term.sum() + up_term.sum()))
    obj = problem.objective_value(x)
    return ResidualReport(primal, dual, comp, gap, obj, abs(obj - sol.objective))


def farkas_value(problem: LpProblem, y) -> float:
    """``b.y - max_{l<=x<=u} (A^T y).x``; positive values prove infeasibility.

    Returns ``-inf`` when ``y`` has the wrong sign on an inequality row or the
    maximum is unbounded.
    """
    y = np.asarray(y, dtype=float)
    if np.any((problem.senses == LE) & (y > 1e-12)) or np.any((problem.senses == GE) & (y < -1e-12)):
        return -np.inf
    g = problem.matrix.T @ y
    g[np.abs(g) < 1e-12] = 0.0
    if np.any((g > 0) & ~np.isfinite(problem.ub)) or np.any((g < 0) & ~np.isfinite(problem.lb)):
        return -np.inf
    best = np.where(g > 0, g * np.where(np.isfinite(problem.ub), problem.ub, 0.0),
                    np.where(g < 0, g * np.where(np.isfinite(problem.lb), problem.lb, 0.0), 0.0))
    return float(problem.b @ y - best.sum())


def is_improving_ray(problem: LpProblem, ray, tol: float = 1e-9) -> bool:
    """True if ``ray`` is a recession direction with negative cost."""
    r = np.asarray(ray, dtype=float)
    ar = problem.matrix @ r
    ok_rows = np.where(problem.senses == LE, ar <= tol, np.where(problem.senses == GE, ar >= -tol,
                                                                   np.abs(ar) <= tol))
    ok_lb = ~np.isfinite(problem.lb) | (r >= -tol)
    ok_ub = ~np.isfinite(problem.ub) | (r <= tol)
    return bool(ok_rows.all() and ok_lb.all() and ok_ub.all() and problem.c @ r < -tol)
