"""Sparse LP kernel: problem assembly, solvers, verification and export."""
from __future__ import annotations

from dataclasses import dataclass

from .check import ResidualReport, check_solution, farkas_value, is_improving_ray, primal_violation
from .highs import highs
from .lpformat import write_lp
from .problem import EQ, GE, LE, LpBuilder, LpProblem, from_dense
from .simplex import SimplexOptions, simplex
from .solution import LpSolution, SolveError, Status

__all__ = [
    "EQ", "GE", "LE", "LpBuilder", "LpProblem", "LpSolution", "ResidualReport", "SimplexOptions",
    "SolveError", "SolveOptions", "Status", "check_solution", "farkas_value", "from_dense", "highs",
    "is_improving_ray", "primal_violation", "simplex", "solve", "write_lp",
]

# Problems larger than this (rows * columns) go to HiGHS under method="auto".
AUTO_SIMPLEX_LIMIT = 2_000_000


@dataclass(frozen=True)
class SolveOptions:
    method: str = "auto"  # "auto", "simplex", "highs" (primal), "highs-dual" or "highs-ipm"
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    max_iter: int = 200_000
    seed: int = 0


def solve(problem: LpProblem, opts: SolveOptions | None = None) -> LpSolution:
    """Solve ``problem``; the built-in simplex handles small problems, HiGHS large ones."""
    opts = opts or SolveOptions()
    method = opts.method
    if method == "auto":
        method = "simplex" if problem.n_rows * problem.n_vars <= AUTO_SIMPLEX_LIMIT else "highs"
    if method == "simplex":
        return simplex(problem, SimplexOptions(feas_tol=opts.feas_tol, opt_tol=opts.opt_tol,
                                               max_iter=opts.max_iter, seed=opts.seed))
    if method == "highs":
        return highs(problem, "primal", feas_tol=opts.feas_tol)
    if method in ("highs-dual", "highs-ipm"):
        return highs(problem, method.removeprefix("highs-"), feas_tol=opts.feas_tol)
    raise ValueError(f"unknown LP method {method!r}")
