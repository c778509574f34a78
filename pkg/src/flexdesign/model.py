"""Deterministic equivalent of the three-stage design and scheduling problem.

Stage one sizes PV, wind and battery. Stage two fixes hourly day-ahead
trades, one vector per cluster shared by all its member scenarios (this
sharing is how non-anticipativity is enforced). Stage three decides
quarter-hourly intraday trades, battery operation and process power for
every scenario.

Process model used here (no shutdown, so the problem stays an LP)::

    min_part_load * P  <=  p[s,t]  <=  (1 + oversizing) * P
    |p[s,t+1] - p[s,t]|  <=  ramp_limit * P * dt        (also from t=T back to 1)
    m[s,t+1] = m[s,t] + (p[s,t] - P) * dt,   0 <= m <= storage_hours * P,   m[s,1] = m[s,T+1]

``m`` is product storage in MWh of nominal-intake equivalent; the cyclic
closure makes the daily mean intake equal ``P``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import lp
from .domain import (
    DAYS_PER_YEAR, DT, HOURS, T, TECHNOLOGIES, CostBreakdown, DesignResult, ProcessSpec, ScenarioTree,
    TechEconSpec, TradeTotals,
)

HOUR_OF_QUARTER = np.arange(T) // 4


class MarketMode(str, Enum):
    ID_ONLY = "id_only"
    SIMULTANEOUS = "simultaneous"


class Objective(str, Enum):
    TAC = "tac"
    GWI = "gwi"
    EPSILON = "epsilon"  # TAC subject to GWI <= gwi_bound


@dataclass(frozen=True)
class ModelConfig:
    market_mode: MarketMode = MarketMode.SIMULTANEOUS
    objective: Objective = Objective.TAC
    gwi_bound: float | None = None
    days_per_year: float = DAYS_PER_YEAR

    def __post_init__(self):
        object.__setattr__(self, "market_mode", MarketMode(self.market_mode))
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.objective is Objective.EPSILON and (self.gwi_bound is None or not np.isfinite(self.gwi_bound)):
            raise ValueError("the epsilon-constraint objective needs a finite gwi_bound")


@dataclass(frozen=True, eq=False)
class VariableIndex:
    """Column positions of every variable family in the built LP."""

    q_pv: int
    q_wind: int
    q_batt: int
    q_da: np.ndarray  # (clusters, 24)
    q_id: np.ndarray  # (scenarios, 96)
    q_in: np.ndarray
    q_out: np.ndarray
    soc: np.ndarray  # (scenarios, 97)
    p: np.ndarray
    storage: np.ndarray  # (scenarios, 97)
    grid: np.ndarray
    q_da_quarter: np.ndarray  # (scenarios, 96) view of the shared DA columns
    rows: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def design(self) -> np.ndarray:
        return np.array([self.q_pv, self.q_wind, self.q_batt])

    def census(self, problem: lp.LpProblem) -> dict[str, int]:
        """Degrees of freedom per family, counting columns that are not fixed by their bounds."""
        free = problem.lb < problem.ub

        def count(idx):
            return int(free[np.asarray(idx).ravel()].sum())

        return {
            "design": count(self.design),
            "DA": count(self.q_da),
            "ID": count(self.q_id),
            "battery": count(self.q_in) + count(self.q_out),
        }


def _check_inputs(tree: ScenarioTree, proc: ProcessSpec, econ: TechEconSpec) -> None:
    problems = tree.violations() + proc.violations() + econ.violations()
    if problems:
        raise ValueError("invalid model inputs: " + "; ".join(problems[:5]))


def build(tree: ScenarioTree, proc: ProcessSpec, econ: TechEconSpec,
          cfg: ModelConfig | None = None) -> tuple[lp.LpProblem, VariableIndex]:
    """Assemble all constraints; the objective is attached separately (zero here)."""
    cfg = cfg or ModelConfig()
    _check_inputs(tree, proc, econ)
    S, C = tree.n_scenarios, tree.n_clusters
    P, tau = proc.p_nom, econ.battery_rate
    pv, wind = tree.pv, tree.wind

    b = lp.LpBuilder("design_scheduling")
    q_pv = int(b.add_vars("Q_PV", (), 0.0, econ.pv.capacity_max))
    q_w = int(b.add_vars("Q_W", (), 0.0, econ.wind.capacity_max))
    q_b = int(b.add_vars("Q_B", (), 0.0, econ.battery.capacity_max))
    da_bound = 0.0 if cfg.market_mode is MarketMode.ID_ONLY else np.inf
    q_da = b.add_vars("q_DA", (C, HOURS), -da_bound, da_bound)
    q_id = b.add_vars("q_ID", (S, T), -np.inf, np.inf)
    q_in = b.add_vars("q_in", (S, T), 0.0)
    q_out = b.add_vars("q_out", (S, T), 0.0)
    soc = b.add_vars("SOC", (S, T + 1), 0.0)
    p = b.add_vars("p", (S, T), proc.p_min, proc.p_max)
    m = b.add_vars("m", (S, T + 1), 0.0, proc.storage_capacity)
    grid = b.add_vars("OPEX_Grid", (S, T), 0.0)

    da_q = q_da[tree.cluster_of][:, HOUR_OF_QUARTER]  # (S, T)
    s_now = soc[:, :T]
    rows = {}
    rows["balance"] = b.add_rows("balance", [(1.0, p), (-1.0, da_q), (-1.0, q_id), (-pv, q_pv), (-wind, q_w),
                                             (1.0, q_in), (-1.0, q_out)], lp.EQ, 0.0)

    # battery
    b.add_rows("charge_rate", [(1.0, q_in), (-1.0 / tau, q_b)], lp.LE, 0.0)
    b.add_rows("discharge_rate", [(1.0, q_out), (-1.0 / tau, q_b)], lp.LE, 0.0)
    b.add_rows("soc_cap", [(1.0, soc), (-1.0, q_b)], lp.LE, 0.0)
    b.add_rows("soc_dyn", [(1.0, soc[:, 1:]), (-1.0, s_now), (-econ.eta_in * DT, q_in),
                           (DT / econ.eta_out, q_out)], lp.EQ, 0.0)
    rows["soc_cyclic"] = b.add_rows("soc_cyclic", [(1.0, soc[:, 0]), (-1.0, soc[:, T])], lp.EQ, 0.0)

    # sales limited by local generation and battery; ID may resell DA purchases
    gen = [(pv, q_pv), (wind, q_w)]
    b.add_rows("da_sale_rate", [(1.0, da_q), *gen, (1.0 / tau, q_b)], lp.GE, 0.0)
    b.add_rows("da_sale_soc", [(1.0, da_q), *gen, (1.0 / DT, s_now)], lp.GE, 0.0)
    b.add_rows("id_sale_rate", [(1.0, q_id), (1.0, da_q), *gen, (1.0 / tau, q_b)], lp.GE, 0.0)
    b.add_rows("id_sale_soc", [(1.0, q_id), (1.0, da_q), *gen, (1.0 / DT, s_now)], lp.GE, 0.0)
    # purchases limited by process and battery intake
    for name, q in (("da", da_q), ("id", q_id)):
        b.add_rows(f"{name}_buy_rate", [(1.0, q), (-1.0 / tau, q_b)], lp.LE, proc.p_max)
        b.add_rows(f"{name}_buy_soc", [(1.0, q), (-1.0 / DT, q_b), (1.0 / DT, s_now)], lp.LE, proc.p_max)

    # process
    ramp = proc.ramp_limit * P * DT
    nxt = np.roll(p, -1, axis=1)  # p[t+1], wrapping T -> 1
    b.add_rows("ramp_up", [(1.0, nxt), (-1.0, p)], lp.LE, ramp)
    b.add_rows("ramp_down", [(1.0, p), (-1.0, nxt)], lp.LE, ramp)
    b.add_rows("storage_dyn", [(1.0, m[:, 1:]), (-1.0, m[:, :T]), (-DT, p)], lp.EQ, -P * DT)
    rows["storage_cyclic"] = b.add_rows("storage_cyclic", [(1.0, m[:, 0]), (-1.0, m[:, T])], lp.EQ, 0.0)

    # grid fee epigraph
    fee = econ.grid_fee * DT
    rows["grid_fee"] = b.add_rows("grid_fee", [(1.0, grid), (-fee, da_q), (-fee, q_id)], lp.GE, 0.0)

    index = VariableIndex(q_pv, q_w, q_b, q_da, q_id, q_in, q_out, soc, p, m, grid, da_q, rows)
    return b.build(), index


def _cluster_weights(tree: ScenarioTree, days: float) -> np.ndarray:
    return days * np.bincount(tree.cluster_of, weights=tree.probabilities, minlength=tree.n_clusters)


def tac_objective(index: VariableIndex, tree: ScenarioTree, econ: TechEconSpec, n_vars: int,
                  days: float = DAYS_PER_YEAR) -> tuple[np.ndarray, float]:
    """Cost vector of the total annualized cost (EUR/a); the constant is zero."""
    c = np.zeros(n_vars)
    for name, j in zip(TECHNOLOGIES, index.design):
        c[j] = econ.tech(name).annualized_cost_per_mw(econ.interest_rate)
    w = days * tree.probabilities[:, None]
    # DA quantities are MW held for one hour (4 quarter-hours)
    c[index.q_da] = _cluster_weights(tree, days)[:, None] * (4 * DT) * tree.da_prices
    c[index.q_id] = w * DT * tree.id_prices
    c[index.grid] = np.broadcast_to(w, index.grid.shape)
    return c, 0.0


def gwi_objective(index: VariableIndex, tree: ScenarioTree, econ: TechEconSpec, n_vars: int,
                  days: float = DAYS_PER_YEAR) -> tuple[np.ndarray, float]:
    """Coefficient vector of the annual GWI (kgCO2/a); sales earn credits."""
    c = np.zeros(n_vars)
    for name, j in zip(TECHNOLOGIES, index.design):
        c[j] = econ.tech(name).annual_gwi_per_mw()
    w = days * tree.probabilities[:, None]
    per_q = w * DT * tree.gwi  # (S, T)
    c[index.q_id] = per_q
    # a DA quantity covers four quarters, each weighted with its own emission factor
    by_hour = per_q.reshape(tree.n_scenarios, HOURS, 4).sum(axis=2)
    da = np.zeros((tree.n_clusters, HOURS))
    np.add.at(da, tree.cluster_of, by_hour)
    c[index.q_da] = da
    return c, 0.0


def epsilon_constraint(problem: lp.LpProblem, gwi_vector, bound: float, gwi_constant: float = 0.0) -> lp.LpProblem:
    """Append ``GWI <= bound``; an infinite bound leaves the problem unchanged.

    The row is scaled by a power of two so its largest coefficient is O(1).
    """
    if bound is None or np.isposinf(bound):
        return problem
    g = np.asarray(gwi_vector, dtype=float)
    scale = _pow2_scale(g)
    return problem.add_row(g / scale, lp.LE, (bound - gwi_constant) / scale, name="gwi_bound")


def _pow2_scale(v) -> float:
    top = float(np.abs(v).max(initial=0.0))
    return float(2.0 ** np.round(np.log2(top))) if top > 0 else 1.0


@dataclass(frozen=True, eq=False)
class Model:
    """A built model with both objective vectors ready."""

    problem: lp.LpProblem  # with the active objective, unscaled
    index: VariableIndex
    tac: np.ndarray
    gwi: np.ndarray
    config: ModelConfig


def assemble(tree: ScenarioTree, proc: ProcessSpec, econ: TechEconSpec,
             cfg: ModelConfig | None = None) -> Model:
    """build + objective selection (+ GWI bound for the epsilon-constraint case)."""
    cfg = cfg or ModelConfig()
    base, index = build(tree, proc, econ, cfg)
    tac, _ = tac_objective(index, tree, econ, base.n_vars, cfg.days_per_year)
    gwi, _ = gwi_objective(index, tree, econ, base.n_vars, cfg.days_per_year)
    problem = base.with_objective(gwi if cfg.objective is Objective.GWI else tac)
    if cfg.objective is Objective.EPSILON:
        problem = epsilon_constraint(problem, gwi, cfg.gwi_bound)
    return Model(problem, index, tac, gwi, cfg)


def solve_model(model: Model, opts: lp.SolveOptions | None = None) -> lp.LpSolution:
    """Solve with the objective scaled to O(1); the returned solution is unscaled."""
    prob = model.problem
    scale = _pow2_scale(prob.c)
    sol = lp.solve(prob.with_objective(prob.c / scale), opts or lp.SolveOptions())
    if not sol.optimal:
        return sol
    return lp.LpSolution(sol.status, x=sol.x, y=sol.y * scale, d=sol.d * scale,
                         objective=prob.objective_value(sol.x), iterations=sol.iterations,
                         method=sol.method, basic=sol.basic)


def extract(sol: lp.LpSolution, model: Model, tree: ScenarioTree, econ: TechEconSpec) -> DesignResult:
    """Capacities, schedules and annual cost/GWI/trade figures of an optimal solution.

    Grid-fee auxiliaries are recomputed at their lower envelope rather than
    read from the solver, since only the TAC objective pushes them down.
    """
    sol.require_optimal("extract")
    idx, cfg = model.index, model.config
    prob = model.problem
    x = np.clip(sol.x, prob.lb, prob.ub)
    days = cfg.days_per_year
    cap = {name: float(x[j]) for name, j in zip(TECHNOLOGIES, idx.design)}

    q_da = x[idx.q_da]
    da_q = q_da[tree.cluster_of][:, HOUR_OF_QUARTER]
    q_id = x[idx.q_id]
    grid = np.maximum(0.0, econ.grid_fee * DT * (da_q + q_id))
    w = days * tree.probabilities

    capex = {name: econ.tech(name).annualized_cost_per_mw(econ.interest_rate) * cap[name] for name in TECHNOLOGIES}
    opex_el = float(model.tac[idx.q_da.ravel()] @ q_da.ravel() + model.tac[idx.q_id.ravel()] @ q_id.ravel())
    opex_grid = float(w @ grid.sum(axis=1))
    breakdown = CostBreakdown(capex, opex_el, opex_grid)

    gwi_parts = {name: econ.tech(name).annual_gwi_per_mw() * cap[name] for name in TECHNOLOGIES}
    gwi_parts["grid"] = float(model.gwi[idx.q_da.ravel()] @ q_da.ravel() + model.gwi[idx.q_id.ravel()] @ q_id.ravel())

    wc = _cluster_weights(tree, days)
    trades = TradeTotals(
        da_purchases=float(wc @ np.maximum(q_da, 0.0).sum(axis=1) * (4 * DT)),
        da_sales=float(wc @ np.maximum(-q_da, 0.0).sum(axis=1) * (4 * DT)),
        id_purchases=float(w @ np.maximum(q_id, 0.0).sum(axis=1) * DT),
        id_sales=float(w @ np.maximum(-q_id, 0.0).sum(axis=1) * DT),
    )
    schedules = {
        "p": x[idx.p], "q_da": q_da, "q_da_quarter": da_q, "q_id": q_id, "q_in": x[idx.q_in],
        "q_out": x[idx.q_out], "soc": x[idx.soc], "storage": x[idx.storage], "grid_fee": grid,
    }
    return DesignResult(
        q_pv=cap["pv"], q_wind=cap["wind"], q_batt=cap["battery"], tac=breakdown.total,
        gwi=float(sum(gwi_parts.values())), breakdown=breakdown, gwi_breakdown=gwi_parts, trades=trades,
        schedules=schedules, objective=cfg.objective.value, market_mode=cfg.market_mode.value,
        gwi_bound=cfg.gwi_bound,
    )


@dataclass(frozen=True, eq=False)
class DesignRun:
    result: DesignResult
    solution: lp.LpSolution
    model: Model
    residuals: lp.ResidualReport
    objective_scale: float = 1.0

    @property
    def verified(self) -> bool:
        """Residual check at default tolerances, duals judged on the scaled objective."""
        return self.residuals.ok(scale=self.objective_scale)


def solve_design(tree: ScenarioTree, proc: ProcessSpec, econ: TechEconSpec, cfg: ModelConfig | None = None,
                 opts: lp.SolveOptions | None = None) -> DesignRun:
    """Assemble, solve, verify and extract in one call.

    Raises :class:`lp.SolveError` if the LP is not solved to optimality.
    """
    model = assemble(tree, proc, econ, cfg)
    sol = solve_model(model, opts).require_optimal(f"design ({model.config.objective.value})")
    report = lp.check_solution(model.problem, sol)
    return DesignRun(extract(sol, model, tree, econ), sol, model, report, _pow2_scale(model.problem.c))
