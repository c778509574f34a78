"""Backend that hands large problems to HiGHS (via ``highspy``).

Rows are passed as ranges ``lo <= a.x <= hi``; HiGHS reports row duals
with the same sign convention as :class:`LpSolution`. Infeasibility and
unboundedness certificates come from two small auxiliary LPs so that they
follow the same conventions as the simplex backend.
"""
from __future__ import annotations

import highspy
import numpy as np
import scipy.sparse as sp

from .problem import EQ, GE, LE, LpProblem
from .solution import LpSolution, Status

# HiGHS "simplex_strategy": 4 is primal simplex, 1 dual; primal is markedly
# faster on the design-and-scheduling models.
_STRATEGY = {"primal": 4, "dual": 1}
METHODS = ("primal", "dual", "ipm")


def _row_bounds(problem: LpProblem):
    b, s = problem.b, problem.senses
    lo = np.where(s == LE, -np.inf, b)
    hi = np.where(s == GE, np.inf, b)
    return lo, hi


def _highs_lp(problem: LpProblem) -> highspy.HighsLp:
    A = problem.matrix.tocsc()
    A.sort_indices()
    lo, hi = _row_bounds(problem)
    model = highspy.HighsLp()
    model.num_col_, model.num_row_ = problem.n_vars, problem.n_rows
    model.col_cost_ = problem.c
    model.offset_ = problem.c0
    model.col_lower_, model.col_upper_ = problem.lb, problem.ub
    model.row_lower_, model.row_upper_ = lo, hi
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = A.indptr
    model.a_matrix_.index_ = A.indices
    model.a_matrix_.value_ = A.data
    return model


def _solve(problem: LpProblem, method: str = "primal", feas_tol: float = 1e-9) -> LpSolution:
    if method not in METHODS:
        raise ValueError(f"unknown HiGHS method {method!r}; choose from {METHODS}")
    h = highspy.Highs()
    h.silent()
    h.setOptionValue("primal_feasibility_tolerance", feas_tol)
    h.setOptionValue("dual_feasibility_tolerance", feas_tol)
    if method == "ipm":
        h.setOptionValue("solver", "ipm")
    else:
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("simplex_strategy", _STRATEGY[method])
    h.passModel(_highs_lp(problem))
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    iters = int(info.simplex_iteration_count) + max(int(info.ipm_iteration_count), 0)
    tag = f"highs-{method}"
    S = highspy.HighsModelStatus
    if status == S.kOptimal:
        sol = h.getSolution()
        x = np.array(sol.col_value, dtype=float)
        y = np.array(sol.row_dual, dtype=float)
        d = problem.c - problem.matrix.T @ y
        basic = None
        if h.getBasis().valid:
            basic = np.array([s == highspy.HighsBasisStatus.kBasic for s in h.getBasis().col_status])
        return LpSolution(Status.OPTIMAL, x=x, y=y, d=d, objective=problem.objective_value(x),
                          iterations=iters, method=tag, basic=basic)
    if status == S.kInfeasible:
        return LpSolution(Status.INFEASIBLE, iterations=iters, method=tag)
    if status in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return LpSolution(Status.UNBOUNDED, iterations=iters, method=tag)
    if status in (S.kIterationLimit, S.kTimeLimit):
        return LpSolution(Status.ITER_LIMIT, iterations=iters, method=tag)
    raise RuntimeError(f"HiGHS stopped with model status {h.modelStatusToString(status)}")


def farkas_lp(problem: LpProblem, method: str = "primal") -> tuple[float, np.ndarray]:
    """Minimize total row violation; returns (violation, row multipliers)."""
    m, n = problem.n_rows, problem.n_vars
    eye = sp.identity(m, format="csr")
    big = sp.hstack([problem.matrix, eye, -eye], format="coo")
    aux = LpProblem(
        c=np.concatenate([np.zeros(n), np.ones(2 * m)]), rows=big.row, cols=big.col, vals=big.data,
        senses=problem.senses, b=problem.b,
        lb=np.concatenate([problem.lb, np.zeros(2 * m)]),
        ub=np.concatenate([problem.ub, np.full(2 * m, np.inf)]),
    )
    res = _solve(aux, method)
    return res.objective, res.y


def ray_lp(problem: LpProblem, method: str = "primal") -> np.ndarray | None:
    """An improving direction of the recession cone, or None."""
    lb = np.where(np.isfinite(problem.lb), 0.0, -1.0)
    ub = np.where(np.isfinite(problem.ub), 0.0, 1.0)
    aux = LpProblem(c=problem.c, rows=problem.rows, cols=problem.cols, vals=problem.vals,
                    senses=problem.senses, b=np.zeros(problem.n_rows), lb=lb, ub=ub)
    res = _solve(aux, method)
    if res.optimal and res.objective < -1e-9:
        return res.x / np.abs(res.x).max()
    return None


def highs(problem: LpProblem, method: str = "primal", feas_tol: float = 1e-7) -> LpSolution:
    sol = _solve(problem, method)
    if sol.status in (Status.INFEASIBLE, Status.UNBOUNDED):
        # HiGHS may only know "infeasible or unbounded"; settle it with certificates.
        violation, y = farkas_lp(problem)
        if violation > feas_tol:
            return LpSolution(Status.INFEASIBLE, iterations=sol.iterations, method=sol.method, farkas=y)
        return LpSolution(Status.UNBOUNDED, iterations=sol.iterations, method=sol.method, ray=ray_lp(problem))
    return sol
