"""Two-phase primal revised simplex for bounded variables.

Rows are turned into equalities with one slack per row; rows whose
initial slack would violate its bounds get an artificial column that phase 1
drives to zero. The basis is held as a sparse LU (SuperLU, threshold
partial pivoting) plus a product-form eta file that is folded back into a
fresh factorization every ``refactor_every`` pivots.

Pricing is Dantzig's largest reduced cost; the ratio test is the two-pass
Harris test. After ``bland_after`` consecutive degenerate pivots both
choices switch to Bland's smallest-index rule until the objective moves.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .problem import EQ, GE, LE, LpProblem
from .solution import LpSolution, Status

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    pivot_tol: float = 1e-9
    max_iter: int = 200_000
    refactor_every: int = 64
    bland_after: int = 200
    scale: bool = True
    seed: int = 0  # no random choices are made; kept so runs can record it


def _pow2(v: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(v)))


def _minmax(S) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (csr) or per-column (csc) min and max of the stored entries."""
    k = len(S.indptr) - 1
    lo, hi = np.ones(k), np.ones(k)
    filled = np.diff(S.indptr) > 0
    if filled.any():
        starts = S.indptr[:-1][filled]
        lo[filled] = np.minimum.reduceat(S.data, starts)
        hi[filled] = np.maximum.reduceat(S.data, starts)
    return lo, hi


def geometric_scaling(A: sp.csr_matrix, passes: int = 4, ignore: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors (powers of two) that pull ``|a_ij|`` towards 1.

    Entries below ``ignore`` times the largest magnitude do not take part;
    round-off specks would otherwise drag whole rows and columns off scale.
    """
    m, n = A.shape
    R, C = np.ones(m), np.ones(n)
    if A.nnz == 0:
        return R, C
    absA = abs(A).tocsr()
    absA.data[absA.data < ignore * absA.data.max()] = 0.0
    absA.eliminate_zeros()
    for _ in range(passes):
        lo, hi = _minmax((sp.diags(R) @ absA @ sp.diags(C)).tocsr())
        R = R / np.sqrt(lo * hi)
        lo, hi = _minmax((sp.diags(R) @ absA @ sp.diags(C)).tocsc())
        C = C / np.sqrt(lo * hi)
    return _pow2(R), _pow2(C)


class _Basis:
    """LU of the basis matrix with product-form updates."""

    def __init__(self, M: sp.csc_matrix, basis: np.ndarray):
        self.M = M
        self.m = M.shape[0]
        self.factor(basis)

    def factor(self, basis: np.ndarray) -> None:
        B = self.M[:, basis].tocsc()
        self.lu = splu(B, permc_spec="COLAMD", diag_pivot_thresh=0.1)
        self.etas: list[tuple[int, np.ndarray]] = []

    def column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        lo, hi = self.M.indptr[j], self.M.indptr[j + 1]
        v[self.M.indices[lo:hi]] = self.M.data[lo:hi]
        return v

    def ftran(self, v: np.ndarray) -> np.ndarray:
        x = self.lu.solve(v)
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= w * xr
            x[r] = xr
        return x

    def btran(self, v: np.ndarray) -> np.ndarray:
        z = np.array(v, dtype=float)
        for r, w in reversed(self.etas):
            z[r] = (z[r] - (z @ w - z[r] * w[r])) / w[r]
        return self.lu.solve(z, trans="T")

    def update(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w))


class _Simplex:
    def __init__(self, problem: LpProblem, opts: SimplexOptions):
        self.opts = opts
        self.p = problem
        A = problem.matrix.tocsr().astype(float)
        m, n = A.shape
        self.m, self.n = m, n
        if opts.scale:
            R, C = geometric_scaling(A)
        else:
            R, C = np.ones(m), np.ones(n)
        self.R, self.C = R, C
        As = (sp.diags(R) @ A @ sp.diags(C)).tocsc()
        b = R * problem.b
        c = C * problem.c
        cmax = np.abs(c).max() if c.size and np.abs(c).max() > 0 else 1.0
        self.cscale = float(_pow2(np.array([cmax]))[0])
        c = c / self.cscale
        lb = problem.lb / C
        ub = problem.ub / C

        # Slack bounds: A x + s = b.
        senses = problem.senses
        s_lb = np.where(senses == GE, -np.inf, 0.0)
        s_ub = np.where(senses == LE, np.inf, 0.0)

        x_n = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        resid = b - As @ x_n
        s_val = np.clip(resid, s_lb, s_ub)
        gap = resid - s_val
        need_art = np.abs(gap) > 0.0
        art_rows = np.flatnonzero(need_art)
        sigma = np.sign(gap[art_rows])
        k = art_rows.size

        ident = sp.identity(m, format="csc")
        art = sp.csc_matrix((sigma, (art_rows, np.arange(k))), shape=(m, k))
        self.M = sp.hstack([As, ident, art], format="csc")
        self.M.sort_indices()
        self.N = n + m + k
        self.lb = np.concatenate([lb, s_lb, np.zeros(k)])
        self.ub = np.concatenate([ub, s_ub, np.full(k, np.inf)])
        self.x = np.concatenate([x_n, s_val, np.abs(gap[art_rows])])
        self.basis = np.arange(n, n + m)
        self.basis[art_rows] = n + m + np.arange(k)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.c2 = np.concatenate([c, np.zeros(m + k)])
        self.c1 = np.concatenate([np.zeros(n + m), np.ones(k)])
        self.art_start = n + m
        self.b = b
        self.factor = _Basis(self.M, self.basis)
        self.iterations = 0
        self.since_refactor = 0

    # -- helpers -----------------------------------------------------------
    def recompute_basics(self) -> None:
        xn = np.where(self.is_basic, 0.0, self.x)
        rhs = self.b - self.M @ xn
        self.x[self.basis] = self.factor.ftran(rhs)

    def refactor(self) -> None:
        self.factor.factor(self.basis)
        self.since_refactor = 0
        self.recompute_basics()

    def duals(self, cost: np.ndarray) -> np.ndarray:
        return self.factor.btran(cost[self.basis])

    def price(self, cost: np.ndarray, y: np.ndarray, bland: bool) -> tuple[int, float]:
        d = cost - self.M.T @ y
        tol = self.opts.opt_tol
        movable = (~self.is_basic) & (self.ub > self.lb)
        inc = movable & (self.x < self.ub) & (d < -tol)
        dec = movable & (self.x > self.lb) & (d > tol)
        score = np.where(inc, -d, 0.0) + np.where(dec & ~inc, d, 0.0)
        cand = np.flatnonzero(score > 0)
        if cand.size == 0:
            return -1, 0.0
        q = int(cand[0]) if bland else int(cand[np.argmax(score[cand])])
        return q, (1.0 if inc[q] else -1.0)

    def ratio_test(self, alpha: np.ndarray, entering_range: float, bland: bool):
        """Return (row, step); row -1 means a bound flip, step inf means unbounded."""
        ptol, ftol = self.opts.pivot_tol, self.opts.feas_tol
        xb = self.x[self.basis]
        lbb = self.lb[self.basis]
        ubb = self.ub[self.basis]
        dec = (alpha > ptol) & np.isfinite(lbb)
        inc = (alpha < -ptol) & np.isfinite(ubb)
        rows = np.flatnonzero(dec | inc)
        if rows.size == 0:
            return -1, entering_range
        a = alpha[rows]
        room = np.where(dec[rows], xb[rows] - lbb[rows], ubb[rows] - xb[rows])
        exact = np.maximum(room, 0.0) / np.abs(a)
        if bland:
            tmin = exact.min()
            tie = rows[exact <= tmin + 1e-12]
            r = int(tie[np.argmin(self.basis[tie])])
            step = float(exact[np.searchsorted(rows, r)])
        else:
            relaxed = (np.maximum(room, 0.0) + ftol) / np.abs(a)
            tmax = relaxed.min()
            ok = exact <= tmax
            pick = np.flatnonzero(ok)[np.argmax(np.abs(a[ok]))]
            r, step = int(rows[pick]), float(exact[pick])
        if entering_range <= step:
            return -1, entering_range
        return r, step

    # -- main loop ---------------------------------------------------------
    def run_phase(self, cost: np.ndarray) -> tuple[Status, np.ndarray | None]:
        """Iterate until pricing finds nothing on a freshly factored basis."""
        while True:
            status, ray = self._iterate(cost)
            if status is not Status.OPTIMAL or self.since_refactor == 0:
                return status, ray
            self.refactor()

    def _iterate(self, cost: np.ndarray) -> tuple[Status, np.ndarray | None]:
        stalled = 0
        while True:
            if self.iterations >= self.opts.max_iter:
                return Status.ITER_LIMIT, None
            if self.since_refactor >= self.opts.refactor_every:
                self.refactor()
            bland = stalled >= self.opts.bland_after
            y = self.duals(cost)
            q, direction = self.price(cost, y, bland)
            if q < 0:
                return Status.OPTIMAL, None
            w = self.factor.ftran(self.factor.column(q))
            alpha = direction * w
            rng = self.ub[q] - self.lb[q]
            r, step = self.ratio_test(alpha, rng, bland)
            self.iterations += 1
            if not np.isfinite(step):
                ray = np.zeros(self.N)
                ray[q] = direction
                ray[self.basis] = -alpha
                return Status.UNBOUNDED, ray
            stalled = stalled + 1 if step <= 1e-12 else 0
            self.x[self.basis] -= step * alpha
            if r < 0:
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                continue
            self.x[q] += direction * step
            leaving = self.basis[r]
            self.x[leaving] = self.lb[leaving] if alpha[r] > 0 else self.ub[leaving]
            self.basis[r] = q
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.factor.update(r, w)
            self.since_refactor += 1

    def solve(self) -> LpSolution:
        p, n, m = self.p, self.n, self.m
        status = Status.OPTIMAL
        if self.N > n + m:
            status, _ = self.run_phase(self.c1)
            self.refactor()
            infeas = float(self.x[self.art_start:].sum())
            if status is Status.OPTIMAL and infeas > self.opts.feas_tol:
                y1 = self.duals(self.c1)
                return LpSolution(Status.INFEASIBLE, iterations=self.iterations, method="simplex",
                                  farkas=self.R * y1)
            if status is not Status.OPTIMAL:
                return LpSolution(status, iterations=self.iterations, method="simplex")
            self.ub[self.art_start:] = 0.0
            nb_art = ~self.is_basic[self.art_start:]
            self.x[self.art_start:][nb_art] = 0.0
        status, ray = self.run_phase(self.c2)
        if status is Status.UNBOUNDED:
            r = self.C * ray[:n]
            r /= max(np.abs(r).max(), 1e-300)
            return LpSolution(Status.UNBOUNDED, iterations=self.iterations, method="simplex", ray=r)
        if status is not Status.OPTIMAL:
            return LpSolution(status, iterations=self.iterations, method="simplex")
        self.refactor()
        x = self.C * self.x[:n]
        y = self.R * self.duals(self.c2) * self.cscale
        d = p.c - p.matrix.T @ y
        basic = np.zeros(n, dtype=bool)
        basic[self.basis[self.basis < n]] = True
        return LpSolution(Status.OPTIMAL, x=x, y=y, d=d, objective=p.objective_value(x),
                          iterations=self.iterations, method="simplex", basic=basic)


def simplex(problem: LpProblem, opts: SimplexOptions | None = None) -> LpSolution:
    return _Simplex(problem, opts or SimplexOptions()).solve()
