"""Core data types shared across the package.

Internal unit system: power MW, energy MWh, money EUR, emissions kgCO2.
Technology cost and emission data are entered per kWp / kWh as usually
published and converted to MW / MWh exactly once, in :class:`Technology`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

#: Quarter-hours per day.
T = 96
#: Quarter-hour length in hours.
DT = 0.25
HOURS = 24
DAYS_PER_YEAR = 365


class Resolution(str, Enum):
    QUARTER_HOUR = "quarter_hour"
    HOUR = "hour"

    @property
    def steps(self) -> int:
        return T if self is Resolution.QUARTER_HOUR else HOURS


class Unit(str, Enum):
    EUR_PER_MWH = "EUR/MWh"
    MW = "MW"
    KG_PER_MWH = "kgCO2/MWh"
    DIMENSIONLESS = "1"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DailyProfile:
    """One day of a single series at quarter-hour or hour resolution.

    Construction never raises on bad data so that :func:`validate` can
    report every problem at once; use :meth:`violations` to check.
    """

    resolution: Resolution
    values: np.ndarray
    unit: Unit
    day_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        object.__setattr__(self, "resolution", Resolution(self.resolution))
        object.__setattr__(self, "unit", Unit(self.unit))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, DailyProfile):
            return NotImplemented
        return (
            self.resolution is other.resolution
            and self.unit is other.unit
            and self.day_id == other.day_id
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def violations(self) -> list[str]:
        out = []
        tag = f"profile {self.day_id or '?'} ({self.unit.value})"
        if self.values.ndim != 1 or len(self.values) != self.resolution.steps:
            out.append(
                f"{tag}: length mismatch, {self.values.size} values for "
                f"{self.resolution.value} (expected {self.resolution.steps})"
            )
        if not np.all(np.isfinite(self.values)):
            out.append(f"{tag}: non-finite values")
        return out

    def to_quarter_hour(self) -> "DailyProfile":
        """Hourly values repeated four times; quarter-hour profiles pass through."""
        if self.resolution is Resolution.QUARTER_HOUR:
            return self
        return DailyProfile(
            Resolution.QUARTER_HOUR, np.repeat(self.values, 4), self.unit, self.day_id
        )


@dataclass(frozen=True)
class ProcessSpec:
    """Flexibility parameters of the generalized continuous process.

    All fractions refer to the nominal power intake ``p_nom`` [MW].
    ``ramp_limit`` is a fraction of ``p_nom`` per hour and
    ``storage_hours`` the time needed to fill the empty product storage
    at nominal intake.
    """

    p_nom: float = 2.74
    oversizing: float = 0.20
    min_part_load: float = 0.50
    storage_hours: float = 3.0
    ramp_limit: float = 0.25

    @classmethod
    def inflexible(cls, p_nom: float = 2.74) -> "ProcessSpec":
        return cls(p_nom, 0.0, 1.0, 0.0, 0.0)

    @property
    def p_max(self) -> float:
        return self.p_nom * (1.0 + self.oversizing)

    @property
    def p_min(self) -> float:
        return self.p_nom * self.min_part_load

    @property
    def storage_capacity(self) -> float:
        """Product storage size in MWh of nominal-intake equivalent."""
        return self.storage_hours * self.p_nom

    def violations(self) -> list[str]:
        out = []
        if not self.p_nom > 0:
            out.append("process: p_nom must be > 0")
        if not 0.0 <= self.min_part_load <= 1.0:
            out.append("process: min_part_load outside [0, 1]")
        if not self.oversizing >= 0.0:
            out.append("process: oversizing must be >= 0")
        if not self.storage_hours >= 0.0:
            out.append("process: storage_hours must be >= 0")
        if not self.ramp_limit >= 0.0:
            out.append("process: ramp_limit must be >= 0")
        vals = (self.p_nom, self.oversizing, self.min_part_load, self.storage_hours, self.ramp_limit)
        if not all(math.isfinite(v) for v in vals):
            out.append("process: non-finite parameter")
        return out


def annuity_factor(interest_rate: float, lifetime: float) -> float:
    """Capital recovery factor ``(1+i)^n i / ((1+i)^n - 1)``."""
    g = (1.0 + interest_rate) ** lifetime
    return g * interest_rate / (g - 1.0)


@dataclass(frozen=True)
class Technology:
    """Cost and emission data for one technology.

    ``capex0``, ``maintenance`` and ``gwi_embodied`` are per kWp (PV, wind)
    or per kWh (battery); ``capacity_max`` is in MW or MWh.
    """

    capex0: float
    lifetime: float
    maintenance: float
    gwi_embodied: float
    capacity_max: float

    @property
    def capex0_per_mw(self) -> float:
        return self.capex0 * 1e3

    @property
    def maintenance_per_mw(self) -> float:
        return self.maintenance * 1e3

    @property
    def gwi_per_mw(self) -> float:
        return self.gwi_embodied * 1e3

    def annualized_cost_per_mw(self, interest_rate: float) -> float:
        """EUR per MW(h) installed and year: annuity on CAPEX plus maintenance."""
        return annuity_factor(interest_rate, self.lifetime) * self.capex0_per_mw + self.maintenance_per_mw

    def annual_gwi_per_mw(self) -> float:
        return self.gwi_per_mw / self.lifetime

    def production_cost(self, interest_rate: float, yield_per_kwp: float) -> float:
        """EUR per MWh generated, given the annual yield in MWh per kWp."""
        per_kwp = annuity_factor(interest_rate, self.lifetime) * self.capex0 + self.maintenance
        return per_kwp / yield_per_kwp


TECHNOLOGIES = ("pv", "wind", "battery")

# Embodied emissions are user-supplied in practice (licensed LCA data); these
# defaults are round illustrative magnitudes so the bi-objective machinery
# has something to trade off against.
_ILLUSTRATIVE_GWI = {"pv": 1500.0, "wind": 600.0, "battery": 120.0}


@dataclass(frozen=True)
class TechEconSpec:
    pv: Technology
    wind: Technology
    battery: Technology
    interest_rate: float = 0.08
    grid_fee: float = 29.6
    battery_rate: float = 4.0
    eta_in: float = math.sqrt(0.9)
    eta_out: float = math.sqrt(0.9)

    @classmethod
    def reference(cls, p_nom: float = 2.74, gwi_embodied: Mapping[str, float] | None = None,
                  **overrides) -> "TechEconSpec":
        """Reference cost data with capacity limits tied to the process size.

        PV and wind are capped at ``p_nom``; the battery at ``battery_rate * p_nom``
        so that its full discharge rate equals the nominal intake.
        """
        gwi = dict(_ILLUSTRATIVE_GWI)
        gwi.update(gwi_embodied or {})
        tau = overrides.get("battery_rate", 4.0)
        return cls(
            pv=Technology(927.0, 25.0, 17.0, gwi["pv"], p_nom),
            wind=Technology(1113.0, 25.0, 13.0, gwi["wind"], p_nom),
            battery=Technology(550.0, 15.0, 20.0, gwi["battery"], tau * p_nom),
            **overrides,
        )

    def tech(self, name: str) -> Technology:
        return getattr(self, name)

    def with_capacity_max(self, pv: float, wind: float, battery: float) -> "TechEconSpec":
        return replace(
            self,
            pv=replace(self.pv, capacity_max=pv),
            wind=replace(self.wind, capacity_max=wind),
            battery=replace(self.battery, capacity_max=battery),
        )

    def scaled_capacity(self, factor: float) -> "TechEconSpec":
        return self.with_capacity_max(
            self.pv.capacity_max * factor,
            self.wind.capacity_max * factor,
            self.battery.capacity_max * factor,
        )

    def without_system(self) -> "TechEconSpec":
        return self.scaled_capacity(0.0)

    def violations(self) -> list[str]:
        out = []
        if not self.interest_rate > 0:
            out.append("econ: interest_rate must be > 0")
        if not self.battery_rate > 0:
            out.append("econ: battery_rate must be > 0")
        if not (0 < self.eta_in and 0 < self.eta_out):
            out.append("econ: efficiencies must be > 0")
        elif self.eta_in * self.eta_out > 1.0 + 1e-12:
            out.append("econ: round-trip efficiency > 1")
        for name in TECHNOLOGIES:
            t = self.tech(name)
            if not t.lifetime > 0:
                out.append(f"econ: {name} lifetime must be > 0")
            if not t.capacity_max >= 0:
                out.append(f"econ: {name} capacity_max must be >= 0")
            if t.capex0 < 0 or t.maintenance < 0:
                out.append(f"econ: {name} costs must be >= 0")
        return out


@dataclass(frozen=True)
class ClusterNode:
    """A second-stage node: one day-ahead price scenario shared by its members."""

    cluster_id: int
    da_price: DailyProfile
    members: tuple[int, ...]


@dataclass(frozen=True)
class ScenarioNode:
    """A third-stage node (one path through the tree)."""

    scenario_id: int
    cluster_id: int
    id_price: DailyProfile
    pv: DailyProfile
    wind: DailyProfile
    gwi: DailyProfile
    probability: float


@dataclass(frozen=True)
class ScenarioTree:
    clusters: tuple[ClusterNode, ...]
    scenarios: tuple[ScenarioNode, ...]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    # Dense views used by the model builder. Rows follow scenario order.
    @cached_property
    def probabilities(self) -> np.ndarray:
        return _frozen_array([s.probability for s in self.scenarios])

    @cached_property
    def cluster_of(self) -> np.ndarray:
        pos = {c.cluster_id: i for i, c in enumerate(self.clusters)}
        arr = np.array([pos[s.cluster_id] for s in self.scenarios], dtype=int)
        arr.setflags(write=False)
        return arr

    @cached_property
    def da_prices(self) -> np.ndarray:
        return _frozen_array([c.da_price.values for c in self.clusters])

    @cached_property
    def id_prices(self) -> np.ndarray:
        return _frozen_array([s.id_price.values for s in self.scenarios])

    @cached_property
    def pv(self) -> np.ndarray:
        return _frozen_array([s.pv.values for s in self.scenarios])

    @cached_property
    def wind(self) -> np.ndarray:
        return _frozen_array([s.wind.values for s in self.scenarios])

    @cached_property
    def gwi(self) -> np.ndarray:
        return _frozen_array([s.gwi.values for s in self.scenarios])

    def violations(self) -> list[str]:
        out = []
        total = float(sum(s.probability for s in self.scenarios))
        if abs(total - 1.0) > 1e-12:
            out.append(f"tree: probabilities sum to {total!r}")
        ids = {c.cluster_id for c in self.clusters}
        for s in self.scenarios:
            if s.cluster_id not in ids:
                out.append(f"tree: scenario {s.scenario_id} refers to unknown cluster {s.cluster_id}")
            if s.probability < 0:
                out.append(f"tree: scenario {s.scenario_id} has negative probability")
            for name, prof in (("pv", s.pv), ("wind", s.wind)):
                if prof.values.size and (prof.values.min() < 0 or prof.values.max() > 1):
                    out.append(f"tree: scenario {s.scenario_id} {name} profile outside [0, 1]")
            for prof, res in ((s.id_price, Resolution.QUARTER_HOUR), (s.pv, Resolution.QUARTER_HOUR),
                              (s.wind, Resolution.QUARTER_HOUR), (s.gwi, Resolution.QUARTER_HOUR)):
                if prof.resolution is not res:
                    out.append(f"tree: scenario {s.scenario_id} profile has wrong resolution")
                out.extend(prof.violations())
        for c in self.clusters:
            if not c.members:
                out.append(f"tree: cluster {c.cluster_id} has no members")
            if c.da_price.resolution is not Resolution.HOUR:
                out.append(f"tree: cluster {c.cluster_id} DA profile is not hourly")
            out.extend(c.da_price.violations())
            for m in c.members:
                if not 0 <= m < len(self.scenarios) or self.scenarios[m].cluster_id != c.cluster_id:
                    out.append(f"tree: cluster {c.cluster_id} member {m} inconsistent")
        return out


@dataclass(frozen=True)
class CostBreakdown:
    capex: dict[str, float]
    opex_el: float
    opex_grid: float

    @property
    def capex_total(self) -> float:
        return float(sum(self.capex.values()))

    @property
    def total(self) -> float:
        return self.capex_total + self.opex_el + self.opex_grid


@dataclass(frozen=True)
class TradeTotals:
    """Expected annual trade volumes in MWh/a; sales are positive magnitudes."""

    da_purchases: float
    da_sales: float
    id_purchases: float
    id_sales: float

    @property
    def purchases(self) -> float:
        return self.da_purchases + self.id_purchases

    @property
    def sales(self) -> float:
        return self.da_sales + self.id_sales


@dataclass(frozen=True)
class DesignResult:
    q_pv: float
    q_wind: float
    q_batt: float
    tac: float
    gwi: float
    breakdown: CostBreakdown
    gwi_breakdown: dict[str, float]
    trades: TradeTotals
    schedules: dict[str, np.ndarray] = field(repr=False)
    objective: str = "tac"
    market_mode: str = "id_only"
    gwi_bound: float | None = None

    def capacities(self) -> dict[str, float]:
        return {"pv": self.q_pv, "wind": self.q_wind, "battery": self.q_batt}

    def summary(self) -> dict:
        b = self.breakdown
        return {
            "objective": self.objective,
            "market_mode": self.market_mode,
            "gwi_bound": self.gwi_bound,
            "q_pv_MW": self.q_pv,
            "q_wind_MW": self.q_wind,
            "q_batt_MWh": self.q_batt,
            "tac_EUR_per_a": self.tac,
            "gwi_kg_per_a": self.gwi,
            "capex_EUR_per_a": dict(b.capex),
            "opex_el_EUR_per_a": b.opex_el,
            "opex_grid_EUR_per_a": b.opex_grid,
            "gwi_breakdown_kg_per_a": dict(self.gwi_breakdown),
            "da_purchases_MWh": self.trades.da_purchases,
            "da_sales_MWh": self.trades.da_sales,
            "id_purchases_MWh": self.trades.id_purchases,
            "id_sales_MWh": self.trades.id_sales,
        }


def _series_violations(name: str, profiles: Sequence[DailyProfile]) -> list[str]:
    out = []
    units = {p.unit for p in profiles}
    if len(units) > 1:
        out.append(f"{name}: mixed units {sorted(u.value for u in units)}")
    res = {p.resolution for p in profiles}
    if len(res) > 1:
        out.append(f"{name}: mixed resolutions")
    for p in profiles:
        out.extend(p.violations())
    return out


def validate(profiles: Mapping[str, Sequence[DailyProfile]] | Sequence[DailyProfile] = (),
             spec: ProcessSpec | None = None, econ: TechEconSpec | None = None) -> list[str]:
    """Collect invariant violations; an empty list means everything is valid.

    ``profiles`` is either one homogeneous series or a mapping from series
    name to its daily profiles. Each series must use a single unit and
    resolution.
    """
    out: list[str] = []
    if isinstance(profiles, Mapping):
        for name, series in profiles.items():
            out.extend(_series_violations(str(name), list(series)))
    else:
        out.extend(_series_violations("profiles", list(profiles)))
    if spec is not None:
        out.extend(spec.violations())
    if econ is not None:
        out.extend(econ.violations())
    return out
