"""Relative PV and wind output from raw weather measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from os import PathLike
from typing import Sequence

import numpy as np

from .domain import DailyProfile, Resolution, T, Unit


class DayRejected(ValueError):
    """A day of raw data cannot be turned into a profile."""


@dataclass(frozen=True, eq=False)
class PerformanceCurve:
    """Relative turbine output as a function of normalized hub wind speed.

    Piecewise-linear between knots; constant beyond the last knot.
    """

    speeds: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        v = np.array(self.speeds, dtype=float)
        q = np.array(self.outputs, dtype=float)
        if v.ndim != 1 or v.shape != q.shape or v.size < 2:
            raise ValueError("performance curve needs matching 1-d knot arrays")
        if np.any(np.diff(v) <= 0):
            raise ValueError("performance curve speeds must be strictly increasing")
        if np.any(q < 0) or np.any(q > 1):
            raise ValueError("performance curve outputs must lie in [0, 1]")
        if v[0] > 0 or (v[0] == 0 and q[0] != 0):
            raise ValueError("performance curve must start at (0, 0)")
        v.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "speeds", v)
        object.__setattr__(self, "outputs", q)

    def __call__(self, v_norm):
        return np.interp(v_norm, self.speeds, self.outputs, left=0.0, right=self.outputs[-1])

    @classmethod
    def from_file(cls, path: str | PathLike) -> "PerformanceCurve":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])

    @classmethod
    def generic(cls) -> "PerformanceCurve":
        """The shipped 50-point generic curve (a digitized stand-in)."""
        ref = resources.files("flexdesign") / "data" / "performance_curve.csv"
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def write(self, path: str | PathLike) -> None:
        with open(path, "w") as fh:
            fh.write("v_norm,q_rel\n")
            for v, q in zip(self.speeds, self.outputs):
                fh.write(f"{v:.6f},{q:.6f}\n")


@dataclass(frozen=True)
class WindSiteSpec:
    hub_height: float = 80.0
    measure_height: float = 10.0
    roughness: float = 0.1
    reference_speed: float = 11.8

    def check(self) -> None:
        if not self.roughness > 0:
            raise ValueError("roughness length must be > 0")
        if not (self.hub_height > self.roughness and self.measure_height > self.roughness):
            raise ValueError("hub and measurement heights must exceed the roughness length")
        if not self.reference_speed > 0:
            raise ValueError("reference wind speed must be > 0")


@dataclass(frozen=True)
class PvSpec:
    efficiency: float = 0.19
    nominal_capacity: float = 0.1  # kW per m2

    def check(self) -> None:
        if not 0 < self.efficiency < 1:
            raise ValueError("PV efficiency must be in (0, 1)")
        if not self.nominal_capacity > 0:
            raise ValueError("PV nominal capacity must be > 0")


def hub_wind_speed(v_measure, site: WindSiteSpec):
    """Log-law extrapolation from measurement to hub height."""
    site.check()
    v = np.asarray(v_measure, dtype=float)
    if np.any(v < 0):
        raise ValueError("wind speed must be >= 0")
    ratio = math.log(site.hub_height / site.roughness) / math.log(site.measure_height / site.roughness)
    out = v * ratio
    return float(out) if out.ndim == 0 else out


def wind_relative_output(v_measure, site: WindSiteSpec, curve: PerformanceCurve | None = None):
    curve = curve or PerformanceCurve.generic()
    v_norm = np.asarray(hub_wind_speed(v_measure, site)) / site.reference_speed
    out = curve(v_norm)
    return float(out) if np.ndim(out) == 0 else out


def pv_relative_output(irradiance, pv: PvSpec):
    """``min(eta * I / cap_nom, 1)`` with ``I`` the tilted irradiance in kW/m2."""
    pv.check()
    irr = np.asarray(irradiance, dtype=float)
    if np.any(irr < 0):
        raise ValueError("irradiance must be >= 0")
    out = np.minimum(pv.efficiency * irr / pv.nominal_capacity, 1.0)
    return float(out) if out.ndim == 0 else out


def resample_10min_to_quarter(minutes: Sequence[float], values: Sequence[float], *,
                              unit: Unit = Unit.DIMENSIONLESS, day_id: str = "",
                              max_gap: float = 30.0) -> DailyProfile:
    """Linearly interpolate one day of 10-minute samples onto quarter-hours.

    ``minutes`` are sample times in minutes after local midnight. A day is
    rejected when consecutive samples, or a day edge and its nearest sample,
    are more than ``max_gap`` minutes apart. Quarter-hours before the first
    or after the last sample take the nearest sample's value.
    """
    t = np.asarray(minutes, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size == 0:
        raise DayRejected(f"{day_id}: no samples")
    if t.shape != y.shape:
        raise DayRejected(f"{day_id}: timestamp/value length mismatch")
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    if not np.all(np.isfinite(y)):
        raise DayRejected(f"{day_id}: non-finite samples")
    gaps = np.diff(np.concatenate(([0.0], t, [24 * 60 - 15.0])))
    if np.any(gaps > max_gap):
        worst = float(gaps.max())
        raise DayRejected(f"{day_id}: gap of {worst:g} min exceeds {max_gap:g} min")
    grid = np.arange(T) * 15.0
    return DailyProfile(Resolution.QUARTER_HOUR, np.interp(grid, t, y), unit, day_id)
