"""Study drivers: Pareto fronts, flexibility sweeps, capacity heatmaps,
savings decomposition and the market-mode comparison.

Every driver returns plain dataclasses whose ``rows()`` give CSV-ready
dictionaries. Cells are independent solves; ``workers > 1`` spreads them
over worker processes while keeping grid order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import lp
from .domain import DesignResult, ProcessSpec, ScenarioTree, TechEconSpec
from .model import DesignRun, MarketMode, ModelConfig, Objective, solve_design

MONOTONE_RTOL = 1e-6


@dataclass(frozen=True)
class StudyInputs:
    tree: ScenarioTree
    process: ProcessSpec
    econ: TechEconSpec
    market_mode: MarketMode = MarketMode.SIMULTANEOUS
    opts: lp.SolveOptions | None = None
    workers: int = 1

    def case(self, process: ProcessSpec | None = None, econ: TechEconSpec | None = None,
             cfg: ModelConfig | None = None) -> tuple:
        return (self.tree, process or self.process, econ or self.econ,
                cfg or ModelConfig(self.market_mode), self.opts)

    def solve(self, cases: Sequence[tuple]) -> list[DesignResult]:
        """Solve cases built by :meth:`case`, in order."""
        cases = list(cases)
        if self.workers <= 1 or len(cases) <= 1:
            return [_solve_case(c) for c in cases]
        with ProcessPoolExecutor(min(self.workers, len(cases))) as pool:
            return list(pool.map(_solve_case, cases))


def _solve_case(case: tuple) -> DesignResult:
    run: DesignRun = solve_design(*case)
    if not run.verified:
        raise lp.SolveError(f"solution failed the residual check: {run.residuals}")
    return run.result


# ---------------------------------------------------------------- Pareto front

def pareto_front(inputs: StudyInputs, n_points: int = 5) -> list[DesignResult]:
    """TAC-optimal design first, GWI-optimal design last, bounds equi-spaced in GWI.

    The GWI end is solved as "minimum TAC at the minimum GWI" so that among
    equally clean designs the cheapest one is reported.
    """
    if n_points < 2:
        raise ValueError("a front needs at least two points")
    mode = inputs.market_mode
    tac_end, gwi_end = inputs.solve([inputs.case(cfg=ModelConfig(mode)),
                                     inputs.case(cfg=ModelConfig(mode, Objective.GWI))])
    gwi_min = gwi_end.gwi
    span = tac_end.gwi - gwi_min
    slack = 1e-7 * max(1.0, abs(gwi_min))
    if span <= slack:
        return [tac_end] * n_points
    bounds = np.linspace(tac_end.gwi, gwi_min, n_points)[1:]
    bounds[-1] += slack
    cases = [inputs.case(cfg=ModelConfig(mode, Objective.EPSILON, float(b))) for b in bounds]
    return [tac_end, *inputs.solve(cases)]


def front_rows(front: Sequence[DesignResult]) -> list[dict]:
    return [{"point": i, **_flat(r.summary())} for i, r in enumerate(front)]


# ---------------------------------------------------------------- flexibility sweeps

class SweepParameter(str, Enum):
    OVERSIZING = "oversizing"
    MIN_PART_LOAD = "min_part_load"
    STORAGE_HOURS = "storage_hours"
    RAMP_LIMIT = "ramp_limit"
    CAPACITY_SCALE = "capacity_scale"

    @property
    def flexible_direction(self) -> int:
        """+1 if larger values enlarge the feasible set, -1 otherwise."""
        return -1 if self is SweepParameter.MIN_PART_LOAD else 1

    def inflexible_value(self) -> float:
        return 1.0 if self is SweepParameter.MIN_PART_LOAD else 0.0

    def default_values(self, process: ProcessSpec, n: int = 5) -> list[float]:
        """From the inflexible value to twice the reference flexibility."""
        if self is SweepParameter.CAPACITY_SCALE:
            ref = 1.0
        elif self is SweepParameter.MIN_PART_LOAD:
            ref = process.min_part_load
        else:
            ref = getattr(process, self.value)
        lo = self.inflexible_value()
        hi = max(0.0, lo + 2.0 * (ref - lo))
        return [float(v) for v in np.linspace(lo, hi, n)]

    def check(self, value: float) -> None:
        ok = np.isfinite(value) and value >= 0 and (self is not SweepParameter.MIN_PART_LOAD or value <= 1)
        if not ok:
            raise ValueError(f"{self.value}={value} outside its physical range")


@dataclass(frozen=True)
class SweepSpec:
    parameter: SweepParameter
    values: tuple[float, ...]
    process: ProcessSpec
    econ: TechEconSpec
    market_mode: MarketMode = MarketMode.SIMULTANEOUS
    objective: Objective = Objective.TAC

    def __post_init__(self):
        object.__setattr__(self, "parameter", SweepParameter(self.parameter))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "market_mode", MarketMode(self.market_mode))
        object.__setattr__(self, "objective", Objective(self.objective))
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.objective is Objective.EPSILON:
            raise ValueError("sweeps run the TAC or GWI objective")
        for v in self.values:
            self.parameter.check(v)

    @classmethod
    def default(cls, parameter, process: ProcessSpec, econ: TechEconSpec, **kw) -> "SweepSpec":
        parameter = SweepParameter(parameter)
        return cls(parameter, tuple(parameter.default_values(process)), process, econ, **kw)

    def case(self, value: float) -> tuple[ProcessSpec, TechEconSpec]:
        if self.parameter is SweepParameter.CAPACITY_SCALE:
            return self.process, self.econ.scaled_capacity(value)
        return replace(self.process, **{self.parameter.value: value}), self.econ


@dataclass(frozen=True)
class SweepRow:
    value: float
    with_system: DesignResult
    without_system: DesignResult

    @property
    def savings(self) -> float:
        """Relative TAC saving of the local system, 1 - TAC_with / TAC_without."""
        base = self.without_system.tac
        return 1.0 - self.with_system.tac / base if base else 0.0

    def row(self, parameter: str) -> dict:
        w, wo = self.with_system, self.without_system
        return {
            "parameter": parameter, "value": self.value,
            "tac_with": w.tac, "tac_without": wo.tac, "savings": self.savings,
            "gwi_with": w.gwi, "gwi_without": wo.gwi,
            "q_pv": w.q_pv, "q_wind": w.q_wind, "q_batt": w.q_batt,
        }


@dataclass(frozen=True)
class Sweep:
    spec: SweepSpec
    points: tuple[SweepRow, ...]

    def rows(self) -> list[dict]:
        return [r.row(self.spec.parameter.value) for r in self.points]

    def monotonicity_violations(self, rtol: float = MONOTONE_RTOL) -> list[str]:
        """Pairs where more flexibility raised the optimal objective."""
        sign = self.spec.parameter.flexible_direction
        key = "gwi" if self.spec.objective is Objective.GWI else "tac"
        pts = sorted(self.points, key=lambda r: sign * r.value)
        out = []
        for a, b in zip(pts, pts[1:]):
            va, vb = getattr(a.with_system, key), getattr(b.with_system, key)
            if vb > va + rtol * max(abs(va), 1.0):
                out.append(f"{self.spec.parameter.value}: {key} rises from {va:.9g} at {a.value} "
                           f"to {vb:.9g} at {b.value}")
        return out


def flexibility_sweep(spec: SweepSpec, tree: ScenarioTree, opts: lp.SolveOptions | None = None,
                      workers: int = 1) -> Sweep:
    """Solve each sweep value with the configured system and without any system."""
    inputs = StudyInputs(tree, spec.process, spec.econ, spec.market_mode, opts, workers)
    cfg = ModelConfig(spec.market_mode, spec.objective)
    cases = []
    for value in spec.values:
        proc, econ = spec.case(value)
        cases += [inputs.case(proc, econ, cfg), inputs.case(proc, econ.without_system(), cfg)]
    res = inputs.solve(cases)
    return Sweep(spec, tuple(SweepRow(v, res[2 * i], res[2 * i + 1]) for i, v in enumerate(spec.values)))


# ---------------------------------------------------------------- capacity heatmap

DEFAULT_SCALES = tuple(float(v) for v in np.linspace(0.0, 2.0, 9))


@dataclass(frozen=True)
class Heatmap:
    oversizing: tuple[float, ...]
    scales: tuple[float, ...]
    tac: np.ndarray  # (oversizing, scale)
    q_pv: np.ndarray
    q_wind: np.ndarray
    q_batt: np.ndarray
    results: tuple[tuple[DesignResult, ...], ...] = field(repr=False)

    def additivity(self) -> np.ndarray | None:
        """|TAC_opt - TAC_est| / TAC_opt per cell.

        The estimate subtracts the standalone flexibility saving (no system)
        and the standalone system saving (least oversizing) from the baseline
        cell. Needs the scale-0 column; otherwise None.
        """
        zero = [j for j, s in enumerate(self.scales) if s == 0]
        if not zero:
            return None
        j0 = zero[0]
        i0 = int(np.argmin(self.oversizing))
        base = self.tac[i0, j0]
        est = self.tac[:, [j0]] + self.tac[[i0], :] - base
        return np.abs(self.tac - est) / np.abs(self.tac)

    def monotonicity_violations(self, rtol: float = MONOTONE_RTOL) -> list[str]:
        out = []
        io, js = np.argsort(self.oversizing), np.argsort(self.scales)
        t = self.tac[np.ix_(io, js)]
        tol = rtol * np.maximum(np.abs(t), 1.0)
        for axis, name in ((0, "oversizing"), (1, "scale")):
            d = np.diff(t, axis=axis)
            lim = tol[1:, :] if axis == 0 else tol[:, 1:]
            if np.any(d > lim):
                out.append(f"TAC rises along {name}")
        return out

    def long_rows(self) -> list[dict]:
        out = []
        add = self.additivity()
        metrics = {"tac": self.tac, "q_pv": self.q_pv, "q_wind": self.q_wind, "q_batt": self.q_batt}
        if add is not None:
            metrics["additivity"] = add
        for name, grid in metrics.items():
            for i, o in enumerate(self.oversizing):
                for j, s in enumerate(self.scales):
                    out.append({"oversizing": o, "capacity_scale": s, "metric": name, "value": float(grid[i, j])})
        return out


def capacity_heatmap(inputs: StudyInputs, oversizing_values: Sequence[float],
                     scale_values: Sequence[float] = DEFAULT_SCALES) -> Heatmap:
    """Optimal TAC over process oversizing and a joint capacity-limit scale."""
    o_vals = tuple(float(v) for v in oversizing_values)
    s_vals = tuple(float(v) for v in scale_values)
    if not o_vals or not s_vals:
        raise ValueError("heatmap grids must be non-empty")
    for v in o_vals:
        SweepParameter.OVERSIZING.check(v)
    for v in s_vals:
        SweepParameter.CAPACITY_SCALE.check(v)

    flat = inputs.solve([inputs.case(replace(inputs.process, oversizing=o), inputs.econ.scaled_capacity(s))
                         for o in o_vals for s in s_vals])
    shape = (len(o_vals), len(s_vals))
    grid = tuple(tuple(flat[i * shape[1]:(i + 1) * shape[1]]) for i in range(shape[0]))

    def arr(attr):
        return np.array([[getattr(r, attr) for r in row] for row in grid])

    return Heatmap(o_vals, s_vals, arr("tac"), arr("q_pv"), arr("q_wind"), arr("q_batt"), grid)


# ---------------------------------------------------------------- savings decomposition

@dataclass(frozen=True)
class Decomposition:
    results: dict[str, DesignResult]

    BASELINE = "inflexible_no_system"
    SINGLES = ("inflexible_battery", "inflexible_wind_pv", "flexible_no_system")
    FULL = "flexible_full_system"

    def savings(self) -> dict[str, float]:
        base = self.results[self.BASELINE].tac
        return {k: base - r.tac for k, r in self.results.items()}

    def additivity(self) -> float:
        """Relative gap between the full saving and the sum of single-addition savings."""
        s = self.savings()
        total = sum(s[k] for k in self.SINGLES)
        full = self.results[self.FULL].tac
        return abs(s[self.FULL] - total) / abs(full)

    def rows(self) -> list[dict]:
        s = self.savings()
        return [{"variant": k, "tac": r.tac, "gwi": r.gwi, "savings": s[k],
                 "q_pv": r.q_pv, "q_wind": r.q_wind, "q_batt": r.q_batt} for k, r in self.results.items()]


def savings_decomposition(inputs: StudyInputs) -> Decomposition:
    """Baseline, the three single additions and the full combination."""
    flex, econ = inputs.process, inputs.econ
    rigid = ProcessSpec.inflexible(flex.p_nom)
    none = econ.without_system()
    variants = {
        Decomposition.BASELINE: (rigid, none),
        "inflexible_battery": (rigid, econ.with_capacity_max(0.0, 0.0, econ.battery.capacity_max)),
        "inflexible_wind_pv": (rigid, econ.with_capacity_max(econ.pv.capacity_max, econ.wind.capacity_max, 0.0)),
        "flexible_no_system": (flex, none),
        Decomposition.FULL: (flex, econ),
    }
    out = inputs.solve([inputs.case(proc, e) for proc, e in variants.values()])
    return Decomposition(dict(zip(variants, out)))


# ---------------------------------------------------------------- market modes

@dataclass(frozen=True)
class MarketComparison:
    id_only: DesignResult
    simultaneous: DesignResult

    @property
    def savings(self) -> float:
        return self.id_only.tac - self.simultaneous.tac

    @property
    def relative_savings(self) -> float:
        return self.savings / self.id_only.tac if self.id_only.tac else 0.0

    def rows(self) -> list[dict]:
        out = []
        for mode, r in (("id_only", self.id_only), ("simultaneous", self.simultaneous)):
            t = r.trades
            out.append({
                "market_mode": mode, "tac": r.tac, "gwi": r.gwi,
                "savings": self.savings if mode == "simultaneous" else 0.0,
                "relative_savings": self.relative_savings if mode == "simultaneous" else 0.0,
                "q_pv": r.q_pv, "q_wind": r.q_wind, "q_batt": r.q_batt,
                "da_purchases": t.da_purchases, "da_sales": t.da_sales,
                "id_purchases": t.id_purchases, "id_sales": t.id_sales,
            })
        return out


def market_mode_comparison(inputs: StudyInputs) -> MarketComparison:
    ido, sim = inputs.solve([inputs.case(cfg=ModelConfig(m)) for m in (MarketMode.ID_ONLY, MarketMode.SIMULTANEOUS)])
    return MarketComparison(ido, sim)


def _flat(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flat(v, f"{prefix}{k}_"))
        else:
            out[f"{prefix}{k}"] = v
    return out
