"""CSV readers and writers for load, weather, holidays and forecasts.

All files are UTF-8, comma separated, dot decimal, with a header row.
"""
from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from .pipeline import N_SLOTS, ForecastResult, HalfHourlySeries, MissingData, WeatherSeries

LOAD_COLUMNS = ["date", "slot", "load_mw"]
WEATHER_COLUMNS = ["date", "slot", "temp_c", "cloud_cover"]
FORECAST_COLUMNS = ["date", "slot", "pred_mw", "trend_mw", "mean_mw", "corr_mw", "kind",
                    "r_hat", "n_train", "flags"]


class CsvFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _read_rows(path, required: list[str]):
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise CsvFormatError(f"{path}: missing column {missing[0]!r}")
        pos = [header.index(c) for c in required]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                yield lineno, [row[i].strip() for i in pos]
            except IndexError:
                raise CsvFormatError(f"{path}:{lineno}: expected {len(header)} fields") from None


def _grid_fill(path, required, n_values):
    """Read date/slot-keyed rows into a dense (days, 48, n_values) array."""
    by_date: dict = {}
    for lineno, row in _read_rows(path, required):
        try:
            date = dt.date.fromisoformat(row[0])
            slot = int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: {exc}") from None
        if not 1 <= slot <= N_SLOTS:
            raise CsvFormatError(f"{path}:{lineno}: slot {slot} outside 1..48")
        day = by_date.setdefault(date, np.full((N_SLOTS, n_values), np.nan))
        day[slot - 1] = vals
    if not by_date:
        raise CsvFormatError(f"{path}: no data rows")
    start, end = min(by_date), max(by_date)
    n_days = (end - start).days + 1
    out = np.full((n_days, N_SLOTS, n_values), np.nan)
    for d, v in by_date.items():
        out[(d - start).days] = v
    bad = ~np.isfinite(out).all(axis=(1, 2))
    if bad.any():
        raise MissingData([start + dt.timedelta(days=int(i)) for i in np.flatnonzero(bad)])
    return start, out


def read_load_csv(path) -> HalfHourlySeries:
    start, arr = _grid_fill(path, LOAD_COLUMNS, 1)
    return HalfHourlySeries(start, arr[:, :, 0].ravel())


def read_weather_csv(path) -> WeatherSeries:
    start, arr = _grid_fill(path, WEATHER_COLUMNS, 2)
    return WeatherSeries(start, arr[:, :, 0], arr[:, :, 1])


def write_load_csv(path, series: HalfHourlySeries) -> None:
    M = series.matrix()
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOAD_COLUMNS)
        for i, d in enumerate(series.dates()):
            ds = d.isoformat()
            for s in range(N_SLOTS):
                w.writerow([ds, s + 1, _fmt(M[i, s])])


def write_weather_csv(path, weather: WeatherSeries) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEATHER_COLUMNS)
        for i in range(weather.n_days):
            ds = (weather.start_date + dt.timedelta(days=i)).isoformat()
            for s in range(N_SLOTS):
                w.writerow([ds, s + 1, _fmt(weather.temp[i, s]), _fmt(weather.cloud[i, s])])


def write_holidays(path, holidays) -> None:
    Path(path).write_text("".join(f"{d.isoformat()}\n" for d in sorted(holidays)),
                          encoding="utf-8")


def write_forecast_csv(path, results: list[ForecastResult]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_COLUMNS)
        for r in results:
            ds = r.date.isoformat()
            flags = ";".join(r.flags)
            for s in range(N_SLOTS):
                w.writerow([ds, s + 1, _fmt(r.predicted[s]), _fmt(r.trend_component),
                            _fmt(r.mean_component[s]), _fmt(r.correction_component[s]),
                            r.kind, r.r_hat_used, r.n_train, flags])


def read_forecast_csv(path) -> list[ForecastResult]:
    rows: dict = {}
    for lineno, row in _read_rows(path, FORECAST_COLUMNS):
        try:
            date = dt.date.fromisoformat(row[0])
            slot = int(row[1])
            nums = [float(v) for v in row[2:6]]
            kind, r_hat, n_train, flags = row[6], int(row[7]), int(row[8]), row[9]
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: {exc}") from None
        if not 1 <= slot <= N_SLOTS:
            raise CsvFormatError(f"{path}:{lineno}: slot {slot} outside 1..48")
        rec = rows.setdefault((date, kind), {"v": np.full((N_SLOTS, 4), np.nan),
                                             "r": r_hat, "n": n_train, "f": flags})
        rec["v"][slot - 1] = nums
    out = []
    for (date, kind), rec in sorted(rows.items()):
        v = rec["v"]
        if not np.isfinite(v).all():
            raise CsvFormatError(f"{path}: incomplete forecast for {date} ({kind})")
        out.append(ForecastResult(date, v[:, 0], float(v[0, 1]), v[:, 2], v[:, 3], kind,
                                  rec["r"], rec["n"], flags=[f for f in rec["f"].split(";") if f]))
    return out
