"""Command-line entry points: simulate, fit, forecast, evaluate, audit.

Every command reads one INI config file. Unknown sections or keys are
errors; relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import datetime as dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .calendar import read_holidays
from .datagen import ScenarioConfig, generate
from .fileio import (CsvFormatError, read_forecast_csv, read_load_csv, read_weather_csv,
                     write_forecast_csv, write_holidays, write_load_csv, write_weather_csv)
from .metrics import AlignmentError, evaluate, format_table
from .pipeline import (CADENCES, FitConfig, HybridForecaster, InsufficientData, MissingData,
                       RegressorSpec, audit_windows, cutoff_for)
from .storage import StoreError, load_store, save_store
from .svdreg import DimSelectConfig

log = logging.getLogger("hybridload")

MIN_HISTORY_DAYS = 730


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "paths": {"load_csv": "path", "weather_csv": "path", "holidays": "path",
              "model_store": "path", "output_dir": "path"},
    "model": {"preset": str, "variant": str, "method": str, "d": int, "c_star": float,
              "tau_grid_size": int, "g_exponent": float, "K": int, "n_min": int,
              "cadence": str, "workers": int},
    "evaluation": {"start": "date", "end": "date", "horizon": int, "kinds": "list"},
    "scenario": {"years": int, "seed": int, "start": "date", "base_load": float,
                 "trend_slope": float, "annual_amplitude": float, "profile_amplitude": float,
                 "true_r": int, "factor_sd": "floats", "factor_ar": "floats",
                 "noise_sd": float, "temp_mean": float, "temp_amplitude": float,
                 "temp_ar": float, "temp_anomaly_sd": float, "temp_diurnal": float,
                 "temp_load_coef": float, "holiday_drop": float},
}


@dataclasses.dataclass
class RunConfig:
    base: Path
    load_csv: Path | None = None
    weather_csv: Path | None = None
    holidays: Path | None = None
    model_store: Path | None = None
    output_dir: Path | None = None
    preset: str = "trend2"
    variant: str = "H2"
    method: str = "ic_majority"
    d: int | None = None
    c_star: float | None = None
    tau_grid_size: int = 100
    g_exponent: float = -0.5
    K: int = 10
    n_min: int = 15
    cadence: str = "per-week"
    workers: int = 1
    start: dt.date | None = None
    end: dt.date | None = None
    horizon: int = 1
    kinds: tuple = ("hybrid", "oracle", "baseline")
    scenario: dict = dataclasses.field(default_factory=dict)

    def dim_config(self) -> DimSelectConfig:
        return DimSelectConfig(method=self.method, d=self.d, c_star=self.c_star,
                               tau_grid_size=self.tau_grid_size, g_exponent=self.g_exponent)

    def fit_config(self) -> FitConfig:
        return FitConfig(self.dim_config(), self.K, self.n_min)

    def require(self, *names):
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"missing required field {n!r}")

    def eval_dates(self) -> list[dt.date]:
        self.require("start", "end")
        n = (self.end - self.start).days + 1
        if n < 1:
            raise ConfigError("evaluation end precedes start")
        return [self.start + dt.timedelta(days=i) for i in range(n)]


def _convert(section, key, raw, kind, base):
    raw = raw.strip()
    try:
        if kind == "path":
            p = Path(raw)
            return p if p.is_absolute() else base / p
        if kind == "date":
            return dt.date.fromisoformat(raw)
        if kind == "list":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if kind == "floats":
            return tuple(float(x) for x in raw.split(","))
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from None


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and stripped.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return i
    return None


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        text = path.read_text(encoding="utf-8")
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = RunConfig(base=path.parent.resolve())
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in cp.items(section):
            where = f"{path}:{_line_of(text, section, key) or '?'}"
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
            kind = _SCHEMA[section][key]
            try:
                if section == "scenario":
                    cfg.scenario[key] = _convert(section, key, raw, kind, cfg.base)
                else:
                    setattr(cfg, key, _convert(section, key, raw, kind, cfg.base))
            except ConfigError as exc:
                raise ConfigError(f"{where}: {exc}") from None
    for k, v in (overrides or {}).items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.cadence not in CADENCES:
        raise ConfigError(f"cadence must be one of {CADENCES}, got {cfg.cadence!r}")
    if cfg.preset not in ("trend1", "trend2"):
        raise ConfigError(f"preset must be trend1 or trend2, got {cfg.preset!r}")
    if cfg.variant not in ("H1", "H2", "H3", "H4"):
        raise ConfigError(f"variant must be one of H1..H4, got {cfg.variant!r}")
    if cfg.horizon < 1:
        raise ConfigError("horizon must be at least 1")
    return cfg


# -- commands ---------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> dict:
    if "seed" not in cfg.scenario:
        raise ConfigError("missing required field 'seed' in [scenario]")
    cfg.require("load_csv", "weather_csv")
    scen = ScenarioConfig(**cfg.scenario)
    series, weather, truth = generate(scen)
    for p in (cfg.load_csv, cfg.weather_csv):
        p.parent.mkdir(parents=True, exist_ok=True)
    write_load_csv(cfg.load_csv, series)
    write_weather_csv(cfg.weather_csv, weather)
    out = {"load_csv": cfg.load_csv, "weather_csv": cfg.weather_csv}
    if cfg.holidays is not None:
        write_holidays(cfg.holidays, truth.holidays)
        out["holidays"] = cfg.holidays
    side = (cfg.output_dir or cfg.load_csv.parent) / "truth.json"
    side.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "scenario": {k: (v.isoformat() if isinstance(v, dt.date) else v)
                     for k, v in dataclasses.asdict(scen).items() if k != "day_profiles"},
        "population_lambdas": truth.population_lambdas.tolist(),
        "weekly_trend": {d.isoformat(): v for d, v in sorted(truth.weekly_trend.items())},
    }
    side.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    out["truth"] = side
    return out


def _inputs(cfg: RunConfig):
    cfg.require("load_csv", "weather_csv")
    for name in ("load_csv", "weather_csv", "holidays"):
        p = getattr(cfg, name)
        if p is not None and not p.is_file():
            raise ConfigError(f"{name}: file not found: {p}")
    series = read_load_csv(cfg.load_csv)
    weather = read_weather_csv(cfg.weather_csv)
    holidays = read_holidays(cfg.holidays) if cfg.holidays is not None else set()
    return series, weather, holidays


def _forecaster(cfg, series, weather, holidays) -> HybridForecaster:
    return HybridForecaster(series, weather, RegressorSpec(cfg.variant), cfg.fit_config(),
                            cfg.preset, frozenset(holidays), cfg.workers)


def _cutoffs(cfg: RunConfig) -> list[dt.date]:
    dates = cfg.eval_dates()
    starts = [d - dt.timedelta(days=cfg.horizon - 1) for d in dates]
    origin = starts[0]
    return sorted({cutoff_for(s, cfg.cadence, origin) for s in starts})


def cmd_fit(cfg: RunConfig) -> Path:
    cfg.require("model_store")
    series, weather, holidays = _inputs(cfg)
    cutoffs = _cutoffs(cfg)
    history = (cutoffs[0] - series.start_date).days
    if history < MIN_HISTORY_DAYS:
        raise InsufficientData(
            f"need at least {MIN_HISTORY_DAYS} days of history before {cutoffs[0]}, "
            f"have {history}")
    fc = _forecaster(cfg, series, weather, holidays)
    snaps = {c: fc.fit(c) for c in cutoffs}
    meta = {"variant": cfg.variant, "preset": cfg.preset, "cadence": cfg.cadence,
            "horizon": cfg.horizon, "origin": cutoffs[0].isoformat(),
            "dim": cfg.dim_config().to_dict(), "K": cfg.K, "n_min": cfg.n_min,
            "models_per_snapshot": {c.isoformat(): len(s.registry.models)
                                    for c, s in snaps.items()}}
    cfg.model_store.parent.mkdir(parents=True, exist_ok=True)
    save_store(cfg.model_store, snaps, meta)
    return cfg.model_store


def _load_for_forecast(cfg):
    cfg.require("model_store", "output_dir")
    snaps, meta = load_store(cfg.model_store)
    if meta["variant"] != cfg.variant:
        raise ConfigError(f"store was fitted for {meta['variant']}, config asks for {cfg.variant}")
    return snaps, meta


def cmd_forecast(cfg: RunConfig) -> Path:
    snaps, meta = _load_for_forecast(cfg)
    series, weather, holidays = _inputs(cfg)
    fc = _forecaster(cfg, series, weather, holidays)
    origin = dt.date.fromisoformat(meta["origin"])
    results = []
    for d in cfg.eval_dates():
        start = d - dt.timedelta(days=cfg.horizon - 1)
        cut = cutoff_for(start, meta["cadence"], origin)
        if cut not in snaps:
            raise StoreError(f"store has no snapshot for cutoff {cut} (needed for {d})")
        day = fc.forecast(snaps[cut], d, cfg.horizon, cfg.kinds)
        for r in day:
            if d in holidays:
                r.flags.append("holiday")
        results.extend(day)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "forecast.csv"
    write_forecast_csv(out, results)
    problems = audit_windows(results, snaps, meta["cadence"], origin, cfg.horizon)
    (cfg.output_dir / "audit.txt").write_text(
        f"violations: {len(problems)}\n" + "".join(p + "\n" for p in problems), encoding="utf-8")
    if problems:
        raise RuntimeError(f"{len(problems)} look-ahead violations, see audit.txt")
    return out


def cmd_audit(cfg: RunConfig) -> list[str]:
    snaps, meta = _load_for_forecast(cfg)
    results = read_forecast_csv(cfg.output_dir / "forecast.csv")
    origin = dt.date.fromisoformat(meta["origin"])
    return audit_windows(results, snaps, meta["cadence"], origin, int(meta["horizon"]))


def cmd_evaluate(forecast_csv, actual_csv, out_dir) -> dict:
    forecasts = [f for f in read_forecast_csv(forecast_csv) if "holiday" not in f.flags]
    series = read_load_csv(actual_csv)
    actuals = {d: series.day(d) for d in series.dates()}
    missing = {f.date for f in forecasts if f.date not in actuals}
    if missing:
        raise AlignmentError(missing)
    order = {"hybrid": 0, "oracle": 1, "baseline": 2}
    kinds = sorted({f.kind for f in forecasts}, key=lambda k: (order.get(k, 9), k))
    reports = {k: evaluate(forecasts, actuals, kind=k) for k in kinds}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "overall.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "mape", "rmse_mw", "days", "pooled_mape", "pooled_rmse_mw"])
        for k, r in reports.items():
            w.writerow([k, f"{r.overall['MAPE']:.8f}", f"{r.overall['RMSE']:.6f}",
                        r.overall["days"], f"{r.pooled['MAPE']:.8f}", f"{r.pooled['RMSE']:.6f}"])
    for name, attr in (("by_month", "by_month"), ("by_day_type", "by_day_type")):
        with (out / f"{name}.csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", name[3:], "mape", "rmse_mw", "days"])
            for k, r in reports.items():
                for g, row in getattr(r, attr).items():
                    w.writerow([k, g, f"{row['MAPE']:.8f}", f"{row['RMSE']:.6f}", row["days"]])
    with (out / "per_day.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "kind", "mape", "rmse_mw"])
        for k, r in reports.items():
            for row in r.per_day:
                w.writerow([row.date.isoformat(), k, f"{row.mape:.8f}", f"{row.rmse:.6f}"])
    (out / "report.txt").write_text(format_table(reports), encoding="utf-8")
    return reports


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridload",
                                description="Hybrid weekly-GAM + curve-regression load forecasting")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="INI config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--variant", choices=["H1", "H2", "H3", "H4"])
        sp.add_argument("--preset", choices=["trend1", "trend2"])
        sp.add_argument("--cadence", choices=list(CADENCES))

    common(sub.add_parser("simulate", help="write a synthetic scenario"))
    common(sub.add_parser("fit", help="fit the trend and class-pair models"))
    fc = sub.add_parser("forecast", help="forecast the evaluation window")
    common(fc)
    fc.add_argument("--start", type=dt.date.fromisoformat)
    fc.add_argument("--end", type=dt.date.fromisoformat)
    fc.add_argument("--horizon", type=int)
    ev = sub.add_parser("evaluate", help="score a forecast CSV against actual loads")
    ev.add_argument("forecast_csv")
    ev.add_argument("actual_csv")
    ev.add_argument("-o", "--out-dir", default="evaluation")
    common(sub.add_parser("audit", help="check forecasts against training windows"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "evaluate":
            reports = cmd_evaluate(args.forecast_csv, args.actual_csv, args.out_dir)
            sys.stdout.write(format_table(reports))
            return 0
        overrides = {k: getattr(args, k, None)
                     for k in ("workers", "variant", "preset", "cadence", "start", "end",
                               "horizon")}
        cfg = load_config(args.config, overrides)
        if args.seed is not None:
            cfg.scenario["seed"] = args.seed
        if args.command == "simulate":
            for k, v in cmd_simulate(cfg).items():
                print(f"{k}: {v}")
        elif args.command == "fit":
            print(f"model store: {cmd_fit(cfg)}")
        elif args.command == "forecast":
            print(f"forecasts: {cmd_forecast(cfg)}")
        elif args.command == "audit":
            problems = cmd_audit(cfg)
            print(f"violations: {len(problems)}")
            for line in problems:
                print(line)
            return 1 if problems else 0
    except (ConfigError, CsvFormatError, StoreError, AlignmentError, MissingData,
            InsufficientData, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
