"""Seeded synthetic days for tests, demos and the shipped CLI fixture.

Weather comes first: 10 m wind speeds and tilted irradiance are drawn per
day and pushed through the weather conversions. Prices and grid emission
factors then respond to the renewable infeed, which gives clustering
something real to find.
"""
from __future__ import annotations

import numpy as np

from .domain import HOURS, T
from .scenarios import DailyData
from .weather import PvSpec, WindSiteSpec, pv_relative_output, wind_relative_output

_HOUR_OF_Q = np.arange(T) / 4.0
# Quarter-hour shaping inside each hour, a common pattern on intraday markets.
_QUARTER_SHAPE = np.tile([1.0, 1 / 3, -1 / 3, -1.0], HOURS)


def _smooth_noise(rng, n_days, width, scale, rho):
    x = np.empty((n_days, width))
    x[:, 0] = rng.normal(scale=scale, size=n_days)
    for t in range(1, width):
        x[:, t] = rho * x[:, t - 1] + np.sqrt(1 - rho**2) * rng.normal(scale=scale, size=n_days)
    return x


def weather_days(n_days: int, seed: int = 0):
    """Raw 10 m wind speed (m/s) and irradiance (kW/m^2), both days x 96."""
    rng = np.random.default_rng([seed, 1])
    level = rng.gamma(4.0, 1.25, size=n_days)[:, None]
    wind = np.clip(level * (1 + 0.35 * _smooth_noise(rng, n_days, T, 1.0, 0.97)), 0.0, None)
    clear = rng.uniform(0.25, 1.0, size=n_days)[:, None]
    season = rng.uniform(0.55, 1.0, size=n_days)[:, None]
    sun = np.clip(np.sin(np.pi * (_HOUR_OF_Q - 6.0) / 14.0), 0.0, None)
    clouds = np.clip(1 + 0.25 * _smooth_noise(rng, n_days, T, 1.0, 0.9), 0.3, 1.2)
    irr = np.round(0.42 * season * clear * sun * clouds, 6)
    return wind, irr


def synthetic_days(n_days: int = 30, seed: int = 0, *, price_level: float = 80.0,
                   price_spread: float = 30.0, deviation: float = 10.0, shaping: float = 4.0,
                   gwi_level: float = 450.0, site: WindSiteSpec | None = None,
                   pv: PvSpec | None = None) -> DailyData:
    """A seeded set of aligned daily profiles.

    ``deviation`` scales the random ID-DA deviation and ``shaping`` the
    intra-hour pattern; with both zero, ID equals DA repeated per quarter.
    """
    site = site or WindSiteSpec()
    pv = pv or PvSpec()
    v10, irr = weather_days(n_days, seed)
    q_w = np.asarray(wind_relative_output(v10, site), dtype=float)
    q_pv = np.asarray(pv_relative_output(irr, pv), dtype=float)
    rng = np.random.default_rng([seed, 2])

    hours = np.arange(HOURS)
    demand = 0.6 + 0.25 * np.exp(-((hours - 8.5) / 2.5) ** 2) + 0.35 * np.exp(-((hours - 19) / 2.5) ** 2)
    renew_h = (q_w + 0.8 * q_pv).reshape(n_days, HOURS, 4).mean(axis=2)
    day_shift = rng.normal(scale=0.15, size=(n_days, 1))
    da = price_level * (1 + day_shift) + price_spread * (demand - 0.8) - 0.6 * price_spread * (renew_h - renew_h.mean())
    da += _smooth_noise(rng, n_days, HOURS, 0.08 * price_spread, 0.7)

    dev = deviation * _smooth_noise(rng, n_days, T, 1.0, 0.8) + shaping * _QUARTER_SHAPE
    id_price = np.repeat(da, 4, axis=1) + dev

    gwi = gwi_level * (1.15 - 0.45 * q_w - 0.35 * q_pv) * (1 + 0.05 * _smooth_noise(rng, n_days, T, 1.0, 0.9))
    gwi = np.clip(gwi, 50.0, None)

    ids = tuple(f"day{d:03d}" for d in range(n_days))
    return DailyData(ids, da, id_price, q_w, q_pv, gwi)


def flat_days(n_days: int = 1, *, da_price: float = 50.0, id_price: float | None = None,
              pv: float = 0.0, wind: float = 0.0, gwi: float = 400.0) -> DailyData:
    """Identical constant days."""
    idp = da_price if id_price is None else id_price

    def full(v, width):
        return np.full((n_days, width), float(v))

    return DailyData(tuple(f"flat{d}" for d in range(n_days)), full(da_price, HOURS), full(idp, T),
                     full(wind, T), full(pv, T), full(gwi, T))


SERIES_UNITS = {
    "da_price": "EUR/MWh", "id_price": "EUR/MWh", "gwi": "kg/MWh",
    "wind_speed": "m/s", "irradiance": "kW/m2",
}


def write_fixture_csv(directory, start: str = "2021-03-22", n_days: int = 14, seed: int = 7,
                      tz: str = "Europe/Berlin", **kw) -> dict[str, str]:
    """Write one CSV per raw series with local ISO-8601 timestamps.

    Timestamps step in real time, so a clock-change day comes out with 23 or
    25 hours, exactly as a market data export would show it. Returns the
    file names keyed by series.
    """
    import datetime as dt
    from pathlib import Path
    from zoneinfo import ZoneInfo

    zone = ZoneInfo(tz)
    data = synthetic_days(n_days, seed, **kw)
    v10, irr = weather_days(n_days, seed)
    q_grid = np.arange(T) * 15.0
    columns = {
        "da_price": (60, lambda d, m: data.da[d, int(m // 60)]),
        "id_price": (15, lambda d, m: data.id_price[d, int(m // 15)]),
        "gwi": (15, lambda d, m: data.gwi[d, int(m // 15)]),
        "wind_speed": (10, lambda d, m: np.interp(m, q_grid, v10[d])),
        "irradiance": (10, lambda d, m: np.interp(m, q_grid, irr[d])),
    }
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    day0 = dt.date.fromisoformat(start)
    names = {}
    for series, (step, value) in columns.items():
        lines = [f"# unit: {SERIES_UNITS[series]}", "timestamp,value"]
        for d in range(n_days):
            date = day0 + dt.timedelta(days=d)
            t = dt.datetime(date.year, date.month, date.day, tzinfo=zone).astimezone(dt.timezone.utc)
            end = dt.datetime.combine(date + dt.timedelta(days=1), dt.time(), zone).astimezone(dt.timezone.utc)
            while t < end:
                local = t.astimezone(zone)
                minute = local.hour * 60 + local.minute
                lines.append(f"{local.isoformat()},{float(value(d, minute)):.6f}")
                t += dt.timedelta(minutes=step)
        names[series] = f"{series}.csv"
        (out / names[series]).write_text("\n".join(lines) + "\n")
    return names
