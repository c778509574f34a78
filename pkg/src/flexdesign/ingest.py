"""Reading raw CSV series into aligned days, plus artifact writing helpers.

Series files look like::

    # unit: EUR/MWh
    timestamp,value
    2021-03-22T00:00:00+01:00,72.979660

Timestamps are ISO-8601 local times, optionally with a UTC offset. A day
is keyed by the date as written. Days that fail any check are dropped
from every series and the reason is kept.
"""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .domain import HOURS, T
from .scenarios import DailyData
from .synthetic import SERIES_UNITS
from .weather import (
    DayRejected, PerformanceCurve, PvSpec, WindSiteSpec, pv_relative_output, resample_10min_to_quarter,
    wind_relative_output,
)

log = logging.getLogger(__name__)

# minutes between samples; 10-minute weather series are resampled, the rest must be complete
STEP = {"da_price": 60, "id_price": 15, "gwi": 15, "wind_speed": 10, "irradiance": 10}
SERIES = tuple(STEP)
SIG_DIGITS = 12


class IngestError(ValueError):
    """A file cannot be used at all (as opposed to a single bad day)."""


@dataclass
class RawSeries:
    name: str
    unit: str
    days: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    offsets: dict[str, set] = field(default_factory=dict)
    rejected: dict[str, str] = field(default_factory=dict)


def _parse_time(text: str) -> dt.datetime:
    return dt.datetime.fromisoformat(text.strip().replace("Z", "+00:00"))


def read_series(path: str | PathLike, name: str) -> RawSeries:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except UnicodeDecodeError as exc:
        raise IngestError(f"{name}: {path} is not a text file") from exc
    unit = ""
    body = []
    for n, line in enumerate(lines, start=1):
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            if key.strip().lower() == "unit":
                unit = val.strip()
        elif line.strip():
            body.append((n, line))
    if not body or [h.strip().lower() for h in next(csv.reader([body[0][1]]))] != ["timestamp", "value"]:
        raise IngestError(f"{name}: {path} lacks the 'timestamp,value' header")
    expected = SERIES_UNITS.get(name)
    if expected and unit != expected:
        raise IngestError(f"{name}: unit {unit or 'missing'!r} in {path}, expected {expected!r}")

    out = RawSeries(name, unit)
    for n, line in body[1:]:
        row = next(csv.reader([line]))
        day = row[0][:10] if row else ""
        try:
            if len(row) != 2:
                raise ValueError("expected 2 fields")
            ts = _parse_time(row[0])
            value = float(row[1])
            if not math.isfinite(value):
                raise ValueError("non-finite value")
        except ValueError as exc:
            try:
                dt.date.fromisoformat(day)
            except ValueError:
                raise IngestError(f"{name}: unparseable row at {path}:{n}") from exc
            out.rejected.setdefault(day, f"malformed row at line {n} of {name}")
            continue
        day = ts.date().isoformat()
        out.days.setdefault(day, []).append((ts.hour * 60 + ts.minute + ts.second / 60, value))
        out.offsets.setdefault(day, set()).add(ts.utcoffset())
    return out


def _regular_day(name: str, samples, offsets) -> np.ndarray:
    step = STEP[name]
    n = 24 * 60 // step
    if len(offsets) > 1 or len(samples) != n:
        raise DayRejected(f"nonstandard day length ({len(samples)} of {n} steps in {name})")
    samples = sorted(samples)
    if [m for m, _ in samples] != [float(k * step) for k in range(n)]:
        raise DayRejected(f"misaligned or duplicate timestamps in {name}")
    return np.array([v for _, v in samples])


def _weather_day(name: str, day: str, samples, offsets) -> np.ndarray:
    if len(offsets) > 1 or len(samples) > 24 * 60 // STEP[name]:
        raise DayRejected(f"nonstandard day length ({len(samples)} samples in {name})")
    m, v = zip(*samples)
    if len(set(m)) != len(m):
        raise DayRejected(f"duplicate timestamps in {name}")
    try:
        return resample_10min_to_quarter(m, v, day_id=day).values
    except DayRejected as exc:
        raise DayRejected(f"{name}: {str(exc).split(': ', 1)[-1]}") from exc


@dataclass(frozen=True)
class IngestResult:
    data: DailyData
    rejected: dict[str, str]

    def summary(self) -> dict:
        return {"days": list(self.data.day_ids), "rejected": dict(sorted(self.rejected.items()))}


def ingest(paths: Mapping[str, str | PathLike], site: WindSiteSpec | None = None, pv: PvSpec | None = None,
           curve: PerformanceCurve | None = None) -> IngestResult:
    """Aligned daily bundles from the five raw series; bad days are dropped with a reason."""
    site, pv = site or WindSiteSpec(), pv or PvSpec()
    missing = [s for s in SERIES if s not in paths]
    if missing:
        raise IngestError(f"no input file for {', '.join(missing)}")
    raw = {s: read_series(paths[s], s) for s in SERIES}

    rejected: dict[str, str] = {}
    for r in raw.values():
        for day, why in r.rejected.items():
            rejected.setdefault(day, why)
    all_days = sorted(set().union(*(r.days for r in raw.values()), rejected))
    rows = {s: [] for s in SERIES}
    kept = []
    for day in all_days:
        if day in rejected:
            continue
        absent = [s for s in SERIES if day not in raw[s].days]
        if absent:
            rejected[day] = f"missing from {', '.join(absent)}"
            continue
        try:
            vals = {}
            for s in SERIES:
                r = raw[s]
                if STEP[s] == 10:
                    vals[s] = _weather_day(s, day, r.days[day], r.offsets[day])
                else:
                    vals[s] = _regular_day(s, r.days[day], r.offsets[day])
            if np.any(vals["wind_speed"] < 0) or np.any(vals["irradiance"] < 0):
                raise DayRejected("negative weather values")
        except DayRejected as exc:
            rejected[day] = str(exc)
            continue
        kept.append(day)
        for s in SERIES:
            rows[s].append(vals[s])

    for day, why in sorted(rejected.items()):
        log.warning("dropping %s: %s", day, why)
    if not kept:
        raise IngestError("no day survived ingestion")
    wind = np.asarray(wind_relative_output(np.array(rows["wind_speed"]), site, curve), dtype=float)
    pvq = np.asarray(pv_relative_output(np.array(rows["irradiance"]), pv), dtype=float)
    da = np.array(rows["da_price"]).reshape(len(kept), HOURS)
    data = DailyData(tuple(kept), da, np.array(rows["id_price"]).reshape(len(kept), T), wind, pvq,
                     np.array(rows["gwi"]).reshape(len(kept), T))
    return IngestResult(data, rejected)


# --- artifacts -------------------------------------------------------------------

def round_sig(v, digits: int = SIG_DIGITS):
    """Recursively round floats to ``digits`` significant digits for output."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.{digits}g}") if math.isfinite(v) else None
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.ndarray):
        return round_sig(v.tolist(), digits)
    if isinstance(v, Mapping):
        return {str(k): round_sig(x, digits) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [round_sig(x, digits) for x in v]
    return v


def atomic_write(path: str | PathLike, text: str) -> str:
    """Write via a temporary file and rename; returns the SHA-256 of the content."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(text.encode()).hexdigest()


def json_text(doc, rounded: bool = True) -> str:
    return json.dumps(round_sig(doc) if rounded else doc, indent=1, sort_keys=False) + "\n"


def csv_text(rows: Iterable[Mapping]) -> str:
    rows = list(rows)
    if not rows:
        return ""
    header = list(rows[0])
    lines = [",".join(header)]
    for r in rows:
        cells = []
        for k in header:
            v = r.get(k)
            if isinstance(v, (float, np.floating)):
                cells.append(f"{float(v):.{SIG_DIGITS}g}")
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def days_to_dict(result: IngestResult) -> dict:
    d = result.data
    return {
        "format": "flexdesign.days/1",
        "rejected": dict(sorted(result.rejected.items())),
        "days": [
            {"day": day, "da_price": d.da[i].tolist(), "id_price": d.id_price[i].tolist(),
             "wind": d.wind[i].tolist(), "pv": d.pv[i].tolist(), "gwi": d.gwi[i].tolist()}
            for i, day in enumerate(d.day_ids)
        ],
    }


def days_from_dict(doc: dict) -> IngestResult:
    if doc.get("format") != "flexdesign.days/1":
        raise ValueError(f"not a days document (format={doc.get('format')!r})")
    days = doc["days"]
    data = DailyData(tuple(x["day"] for x in days), *(np.array([x[k] for x in days], dtype=float)
                                                      for k in ("da_price", "id_price", "wind", "pv", "gwi")))
    return IngestResult(data, dict(doc.get("rejected", {})))
