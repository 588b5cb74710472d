"""The hybrid forecaster: weekly trend + per-class-pair curve regression.

For a target day ``D`` the prediction is

    trend(week of D) + mean residual curve + sum_j xi_j phi_j

where the mean and the ``phi_j`` come from the curve regression fitted on
consecutive-day pairs sharing D's (previous class, class) pair, and the
``xi_j`` are predicted from the previous day's residual curve (optionally
joined with D's temperature curve).
"""
from __future__ import annotations

import datetime as dt
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .calendar import DayClass, classify_day, offset_code
from .curves import CurveSample, Curve, Grid, SegmentStats, day_grid, join_grids, \
    standardize_and_join_arrays
from .gam import GamModel, WeeklyRecord, fit_gam, trend_terms
from .svdreg import CurveRegressionModel, DimSelectConfig, fit_curve_regression, \
    oracle_values

log = logging.getLogger(__name__)

N_SLOTS = 48
HALF = N_SLOTS // 2
ONE_DAY = dt.timedelta(days=1)


class MissingData(ValueError):
    def __init__(self, gaps):
        self.gaps = gaps
        super().__init__(f"series has missing values on {len(gaps)} day(s), first: {gaps[:5]}")


class MissingTrend(KeyError):
    pass


class InsufficientData(ValueError):
    pass


class ModelUnavailable(KeyError):
    pass


# -- series -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HalfHourlySeries:
    start_date: dt.date
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size % N_SLOTS:
            raise ValueError("series length must be a multiple of 48")
        if np.any(v[np.isfinite(v)] <= 0):
            raise ValueError("load values must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n_days(self) -> int:
        return self.values.size // N_SLOTS

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=self.n_days - 1)

    def matrix(self) -> np.ndarray:
        return self.values.reshape(self.n_days, N_SLOTS)

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(self.n_days)]

    def index(self, date: dt.date) -> int:
        i = (date - self.start_date).days
        if not 0 <= i < self.n_days:
            raise KeyError(date)
        return i

    def day(self, date: dt.date) -> np.ndarray:
        return self.matrix()[self.index(date)]

    def __contains__(self, date) -> bool:
        return 0 <= (date - self.start_date).days < self.n_days


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    start_date: dt.date
    temp: np.ndarray  # (n_days, 48) degC
    cloud: np.ndarray  # (n_days, 48) fraction

    def __post_init__(self):
        t = np.asarray(self.temp, dtype=float).reshape(-1, N_SLOTS)
        c = np.asarray(self.cloud, dtype=float).reshape(-1, N_SLOTS)
        if t.shape != c.shape:
            raise ValueError("temperature and cloud cover differ in length")
        object.__setattr__(self, "temp", t)
        object.__setattr__(self, "cloud", c)

    @property
    def n_days(self) -> int:
        return self.temp.shape[0]

    def index(self, date: dt.date) -> int:
        i = (date - self.start_date).days
        if not 0 <= i < self.n_days:
            raise KeyError(date)
        return i

    def temp_day(self, date: dt.date) -> np.ndarray:
        return self.temp[self.index(date)]

    def __contains__(self, date) -> bool:
        return 0 <= (date - self.start_date).days < self.n_days


def monday_of(date: dt.date) -> dt.date:
    return date - dt.timedelta(days=date.weekday())


# -- weekly layer -----------------------------------------------------------------

@dataclass(frozen=True)
class WeekInfo:
    week_start: dt.date
    t: int
    I: int
    O: float
    T: float
    C: float
    L: float  # observed weekly mean load (nan when unobserved)


def weekly_table(series: HalfHourlySeries | None, weather: WeatherSeries) -> list[WeekInfo]:
    """Every complete Monday-start week covered by the weather series.

    Loads are attached where the series covers the whole week.
    """
    first = weather.start_date
    monday = first if first.weekday() == 0 else first + dt.timedelta(days=7 - first.weekday())
    last = weather.start_date + dt.timedelta(days=weather.n_days - 1)
    out = []
    t = 0
    while monday + dt.timedelta(days=6) <= last:
        i = weather.index(monday)
        T = float(weather.temp[i:i + 7].mean())
        C = float(weather.cloud[i:i + 7].mean())
        O = float(np.median([offset_code(monday + dt.timedelta(days=k)) for k in range(7)]))
        L = np.nan
        if series is not None and monday in series and monday + dt.timedelta(days=6) in series:
            j = series.index(monday)
            L = float(series.matrix()[j:j + 7].mean())
        out.append(WeekInfo(monday, t, monday.isocalendar()[1], O, T, C, L))
        monday += dt.timedelta(days=7)
        t += 1
    return out


def _check_gaps(series: HalfHourlySeries):
    bad = ~np.isfinite(series.matrix()).all(axis=1)
    if bad.any():
        dates = series.dates()
        raise MissingData([dates[i] for i in np.flatnonzero(bad)])


def weekly_aggregate(series: HalfHourlySeries, weather: WeatherSeries | None = None
                     ) -> list[WeeklyRecord]:
    """Weekly records over complete Monday-start weeks of the series.

    The first complete week only supplies the lagged values of the second,
    so it yields no record. Without weather, T and C are recorded as 0.
    """
    _check_gaps(series)
    if weather is None:
        weather = WeatherSeries(series.start_date, np.zeros((series.n_days, N_SLOTS)),
                                np.zeros((series.n_days, N_SLOTS)))
    weeks = [w for w in weekly_table(series, weather) if np.isfinite(w.L)]
    if len(weeks) < 2:
        raise InsufficientData("need at least two complete weeks")
    recs = []
    for prev, w in zip(weeks, weeks[1:]):
        if (w.week_start - prev.week_start).days != 7:
            continue
        recs.append(WeeklyRecord(w.t, w.L, prev.L, w.O, w.T, prev.T, w.C, w.I, w.week_start))
    return recs


@dataclass
class TrendModel:
    """Fitted weekly trend with the covariate table needed to extend it.

    Weeks whose previous week was fully observed before ``cutoff`` use the
    observed lagged load; later weeks feed back the predicted trend.
    """

    gam: GamModel
    weeks: dict  # week_start -> WeekInfo (L masked after cutoff)
    cutoff: dt.date
    last_train_week: dt.date | None
    _cache: dict = field(default_factory=dict, repr=False)

    def record(self, week_start: dt.date) -> WeeklyRecord:
        w = self.weeks.get(week_start)
        prev = self.weeks.get(week_start - dt.timedelta(days=7))
        if w is None or prev is None:
            raise MissingTrend(week_start)
        if prev.week_start + dt.timedelta(days=7) <= self.cutoff and np.isfinite(prev.L):
            L_prev = prev.L
        else:
            L_prev = self.value(prev.week_start)
        L = w.L if np.isfinite(w.L) else L_prev
        return WeeklyRecord(w.t, L, L_prev, w.O, w.T, prev.T, w.C, w.I, w.week_start)

    def value(self, week_start: dt.date) -> float:
        week_start = monday_of(week_start)
        if week_start not in self._cache:
            self._cache[week_start] = self.gam.predict_record(self.record(week_start))
        return self._cache[week_start]

    def for_day(self, date: dt.date) -> float:
        return self.value(monday_of(date))


def fit_trend(series: HalfHourlySeries, weather: WeatherSeries, cutoff: dt.date,
              preset: str = "trend2") -> TrendModel:
    """Fit the weekly GAM on weeks ending strictly before ``cutoff``."""
    table = weekly_table(series, weather)
    masked = {}
    for w in table:
        observed = w.week_start + dt.timedelta(days=6) < cutoff
        masked[w.week_start] = w if observed else WeekInfo(
            w.week_start, w.t, w.I, w.O, w.T, w.C, np.nan)
    recs = []
    for w in table:
        prev = masked.get(w.week_start - dt.timedelta(days=7))
        cur = masked[w.week_start]
        if prev is None or not (np.isfinite(cur.L) and np.isfinite(prev.L)):
            continue
        recs.append(WeeklyRecord(cur.t, cur.L, prev.L, cur.O, cur.T, prev.T, cur.C, cur.I,
                                 cur.week_start))
    if len(recs) < 30:
        raise InsufficientData(f"only {len(recs)} complete weekly records before {cutoff}")
    gam = fit_gam(recs, trend_terms(preset, recs))
    model = TrendModel(gam, masked, cutoff, recs[-1].week_start)
    # fitted values of the training weeks, in one batch
    model._cache.update(zip((r.week_start for r in recs), gam.predict(recs)))
    return model


def detrend(series: HalfHourlySeries, trend: TrendModel,
            days: Iterable[dt.date] | None = None) -> dict:
    """Residual curves (observed minus weekly trend) keyed by date.

    With ``days`` given, every listed day must have a trend value
    (``MissingTrend`` otherwise); by default all days with one are returned.
    """
    M = series.matrix()
    out = {}
    strict = days is not None
    for d in (days if strict else series.dates()):
        try:
            tr = trend.for_day(d)
        except MissingTrend:
            if strict:
                raise
            continue
        out[d] = M[series.index(d)] - tr
    return out


# -- regressor layouts ------------------------------------------------------------

@dataclass(frozen=True)
class RegressorSpec:
    variant: str = "H2"

    def __post_init__(self):
        if self.variant not in ("H1", "H2", "H3", "H4"):
            raise ValueError(f"unknown regressor variant {self.variant!r}")

    @property
    def uses_temperature(self) -> bool:
        return self.variant in ("H2", "H4")

    @property
    def half_day(self) -> bool:
        return self.variant in ("H3", "H4")

    @property
    def parts(self) -> tuple:
        return ("am", "pm") if self.half_day else ("full",)


_FULL = slice(0, N_SLOTS)
_AM = slice(0, HALF)
_PM = slice(HALF, N_SLOTS)
_RESPONSE_SLICE = {"full": _FULL, "am": _AM, "pm": _PM}


def part_grids(part: str, uses_temperature: bool) -> tuple[Grid, Grid]:
    """(response grid, regressor grid) for one model part."""
    g = day_grid(N_SLOTS)
    am = Grid.trapezoid(g.points[_AM])
    pm = Grid.trapezoid(g.points[_PM])
    if part == "full":
        gy, gl, gt = g, g, g
    elif part == "am":
        gy, gl, gt = am, pm, am  # previous evening's load, this morning's temperature
    else:
        gy, gl, gt = pm, am, pm  # this morning's load, this evening's temperature
    gx = join_grids(gl, gt) if uses_temperature else gl
    return gy, gx


def regressor_load(part: str, prev_resid: np.ndarray, same_day_resid: np.ndarray | None):
    if part == "full":
        return prev_resid
    if part == "am":
        return prev_resid[_PM]
    return same_day_resid[_AM]


def pair_index(residuals: Mapping[dt.date, np.ndarray], holidays=frozenset(),
               before: dt.date | None = None) -> dict:
    """Response dates of usable consecutive-day pairs, grouped by class pair."""
    out: dict = {}
    for d in sorted(residuals):
        if before is not None and d >= before:
            continue
        p = d - ONE_DAY
        if p not in residuals or d in holidays or p in holidays:
            continue
        out.setdefault((classify_day(p), classify_day(d)), []).append(d)
    return out


@dataclass
class PairData:
    sample: CurveSample
    stats: SegmentStats | None
    dates: list


def build_training_pairs(residuals: Mapping[dt.date, np.ndarray], target_class: DayClass,
                         prev_class: DayClass, spec: RegressorSpec,
                         weather: WeatherSeries | None = None, holidays=frozenset(),
                         part: str = "full", n_min: int = 15,
                         before: dt.date | None = None, index: dict | None = None) -> PairData:
    """Consecutive-day pairs (day i-1 in ``prev_class``, day i in ``target_class``).

    Pairs touching a holiday are dropped, as are pairs whose response day is
    not strictly before ``before``.
    """
    if index is None:
        index = pair_index(residuals, holidays, before)
    dates = [d for d in index.get((prev_class, target_class), [])
             if not spec.uses_temperature or (weather is not None and d in weather)]
    if len(dates) < n_min:
        raise InsufficientData(
            f"{len(dates)} pairs for {prev_class.key()} -> {target_class.key()}, need {n_min}")
    Y = np.array([residuals[d][_RESPONSE_SLICE[part]] for d in dates])
    XL = np.array([regressor_load(part, residuals[d - ONE_DAY], residuals[d]) for d in dates])
    gy, gx = part_grids(part, spec.uses_temperature)
    stats = None
    if spec.uses_temperature:
        XT = np.array([weather.temp_day(d)[_RESPONSE_SLICE[part]] for d in dates])
        stats = SegmentStats.fit(XL, XT)
        X = standardize_and_join_arrays(XL, XT, stats)
    else:
        X = XL
    return PairData(CurveSample(gy, gx, Y, X), stats, dates)


# -- registry ---------------------------------------------------------------------

@dataclass(frozen=True)
class PairModel:
    prev: DayClass
    target: DayClass
    parts: dict  # part name -> CurveRegressionModel
    stats: dict  # part name -> SegmentStats | None
    n_train: int
    last_date: dt.date  # latest response day used

    @property
    def r_hat(self) -> int:
        return max(m.r_hat for m in self.parts.values())


@dataclass(frozen=True)
class ModelRegistry:
    spec: RegressorSpec
    models: dict  # (prev, target) -> PairModel
    class_means: dict  # target DayClass -> mean residual curve (fallback baseline)
    cutoff: dt.date
    absent: dict  # (prev, target) -> n pairs available
    realized: frozenset

    def get(self, prev: DayClass, target: DayClass) -> PairModel:
        try:
            return self.models[(prev, target)]
        except KeyError:
            raise ModelUnavailable((prev.key(), target.key())) from None


@dataclass(frozen=True)
class FitConfig:
    dim: DimSelectConfig = field(default_factory=DimSelectConfig)
    K: int = 10
    n_min: int = 15


def fit_pair(residuals, prev: DayClass, target: DayClass, spec: RegressorSpec,
             weather, holidays, cfg: FitConfig, before, index=None) -> PairModel:
    parts, stats = {}, {}
    n = 0
    last = None
    for part in spec.parts:
        pdata = build_training_pairs(residuals, target, prev, spec, weather, holidays,
                                     part, cfg.n_min, before, index=index)
        K = min(cfg.K, pdata.sample.n - 1, len(pdata.sample.grid_x), len(pdata.sample.grid_y))
        parts[part] = fit_curve_regression(pdata.sample, cfg.dim, K)
        stats[part] = pdata.stats
        n = pdata.sample.n
        last = pdata.dates[-1]
    return PairModel(prev, target, parts, stats, n, last)


def fit_all_models(residuals: Mapping[dt.date, np.ndarray], spec: RegressorSpec,
                   cfg: FitConfig | None = None, weather: WeatherSeries | None = None,
                   holidays=frozenset(), before: dt.date | None = None,
                   workers: int = 1) -> ModelRegistry:
    """One curve-regression model per realized (previous class, class) pair."""
    cfg = cfg or FitConfig()
    index = pair_index(residuals, holidays, before)
    counts = {k: len(v) for k, v in index.items()}
    sums: dict = {}
    for d in sorted(residuals):
        if (before is None or d < before) and d not in holidays:
            sums.setdefault(classify_day(d), []).append(residuals[d])
    if before is None:
        before = max(residuals) + ONE_DAY
    eligible = sorted(k for k, n in counts.items() if n >= cfg.n_min)

    def job(key):
        try:
            return key, fit_pair(residuals, key[0], key[1], spec, weather, holidays, cfg,
                                 before, index)
        except InsufficientData:
            return key, None

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(job, eligible))
    else:
        results = [job(k) for k in eligible]
    models = {k: m for k, m in results if m is not None}
    absent = {k: n for k, n in counts.items() if k not in models}
    means = {c: np.mean(v, axis=0) for c, v in sums.items()}
    return ModelRegistry(spec, models, means, before, absent, frozenset(counts))


# -- forecasting --------------------------------------------------------------------

@dataclass
class ForecastResult:
    date: dt.date
    predicted: np.ndarray
    trend_component: float
    mean_component: np.ndarray
    correction_component: np.ndarray
    kind: str
    r_hat_used: int
    n_train: int
    step: int = 1
    flags: list = field(default_factory=list)

    @property
    def residual(self) -> np.ndarray:
        return self.mean_component + self.correction_component

    def curve(self) -> Curve:
        return Curve(day_grid(N_SLOTS), self.predicted)


def _assemble(date, trend, mean, corr, kind, r_hat, n_train, step=1, flags=None):
    predicted = trend + mean + corr
    return ForecastResult(date, predicted, float(trend), mean, corr, kind, r_hat, n_train,
                          step, list(flags or []))


def _regressor(model_part: str, pm: PairModel, spec: RegressorSpec, prev_resid,
               same_day_resid, temp):
    xl = regressor_load(model_part, prev_resid, same_day_resid)
    if not spec.uses_temperature:
        return xl
    if temp is None:
        raise ValueError("temperature curve required for this regressor variant")
    return standardize_and_join_arrays(xl, temp[_RESPONSE_SLICE[model_part]],
                                       pm.stats[model_part])


def predict_residual(pm: PairModel, spec: RegressorSpec, prev_resid: np.ndarray,
                     temp: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """(mean curve, predicted residual) for one day from its pair model."""
    if not spec.half_day:
        m = pm.parts["full"]
        x = _regressor("full", pm, spec, prev_resid, None, temp)
        return m.cross_cov.mean_y.copy(), m.predict_values(x)
    am, pmm = pm.parts["am"], pm.parts["pm"]
    y_am = am.predict_values(_regressor("am", pm, spec, prev_resid, None, temp))
    same = np.concatenate([y_am, np.zeros(HALF)])
    y_pm = pmm.predict_values(_regressor("pm", pm, spec, prev_resid, same, temp))
    mean = np.concatenate([am.cross_cov.mean_y, pmm.cross_cov.mean_y])
    return mean, np.concatenate([y_am, y_pm])


def forecast_day(date: dt.date, spec: RegressorSpec, models: ModelRegistry,
                 trend: TrendModel | float, prev_resid: np.ndarray,
                 temp: np.ndarray | None = None, step: int = 1) -> ForecastResult:
    """Hybrid forecast: trend + mean residual curve + regression correction."""
    pm = models.get(classify_day(date - ONE_DAY), classify_day(date))
    L = trend if isinstance(trend, (int, float)) else trend.for_day(date)
    mean, y = predict_residual(pm, spec, np.asarray(prev_resid, dtype=float), temp)
    return _assemble(date, L, mean, y - mean, "hybrid", pm.r_hat, pm.n_train, step)


def forecast_oracle(date: dt.date, y_true_residual: np.ndarray, models: ModelRegistry,
                    trend: TrendModel | float) -> ForecastResult:
    """Forecast using the true residual's projections on the fitted directions."""
    pm = models.get(classify_day(date - ONE_DAY), classify_day(date))
    L = trend if isinstance(trend, (int, float)) else trend.for_day(date)
    y_true = np.asarray(y_true_residual, dtype=float)
    means, fits = [], []
    for part, m in pm.parts.items():
        sl = _RESPONSE_SLICE[part]
        means.append(m.cross_cov.mean_y)
        fits.append(oracle_values(m, y_true[sl]))
    mean, y = np.concatenate(means), np.concatenate(fits)
    return _assemble(date, L, mean, y - mean, "oracle", pm.r_hat, pm.n_train)


def forecast_baseline(date: dt.date, models: ModelRegistry,
                      trend: TrendModel | float) -> ForecastResult:
    """Trend plus the class-pair mean residual curve; no day-to-day dynamics."""
    L = trend if isinstance(trend, (int, float)) else trend.for_day(date)
    prev, cur = classify_day(date - ONE_DAY), classify_day(date)
    flags = []
    try:
        pm = models.get(prev, cur)
        mean = np.concatenate([m.cross_cov.mean_y for m in pm.parts.values()])
        r, n = 0, pm.n_train
    except ModelUnavailable:
        flags.append("no_pair_model")
        mean = models.class_means.get(cur)
        if mean is None:
            flags.append("no_class_mean")
            mean = np.zeros(N_SLOTS)
        r, n = 0, 0
    return _assemble(date, L, np.array(mean, dtype=float), np.zeros(N_SLOTS), "baseline",
                     r, n, flags=flags)


def forecast_multi_step(start_date: dt.date, horizon_days: int, spec: RegressorSpec,
                        models: ModelRegistry, trend: TrendModel, prev_resid: np.ndarray,
                        weather: WeatherSeries | None = None) -> list[ForecastResult]:
    """Recursive forecasts for ``start_date`` and the following days.

    Each step's predicted residual becomes the next step's regressor; the
    trend of weeks after the training cutoff is itself extended recursively.
    """
    if horizon_days < 1:
        raise ValueError("horizon must be at least 1")
    out = []
    x = np.asarray(prev_resid, dtype=float)
    for h in range(horizon_days):
        d = start_date + dt.timedelta(days=h)
        temp = weather.temp_day(d) if spec.uses_temperature else None
        res = forecast_day(d, spec, models, trend, x, temp, step=h + 1)
        out.append(res)
        x = res.residual
    return out


# -- end-to-end driver ----------------------------------------------------------------

CADENCES = ("per-day", "per-week", "once")


def cutoff_for(date: dt.date, cadence: str, origin: dt.date) -> dt.date:
    """Training cutoff (exclusive) serving forecasts made for ``date``."""
    if cadence == "per-day":
        return date
    if cadence == "per-week":
        return max(monday_of(date), origin)
    if cadence == "once":
        return origin
    raise ValueError(f"unknown refit cadence {cadence!r}")


@dataclass
class Snapshot:
    """Everything fitted with data strictly before ``cutoff``."""

    cutoff: dt.date
    trend: TrendModel
    registry: ModelRegistry

    def windows(self) -> dict:
        last_pair = max((m.last_date for m in self.registry.models.values()), default=None)
        last_week_end = (self.trend.last_train_week + dt.timedelta(days=6)
                         if self.trend.last_train_week else None)
        return {"cutoff": self.cutoff, "last_pair_date": last_pair,
                "last_gam_day": last_week_end}


@dataclass
class HybridForecaster:
    series: HalfHourlySeries
    weather: WeatherSeries
    spec: RegressorSpec = field(default_factory=RegressorSpec)
    fit_config: FitConfig = field(default_factory=FitConfig)
    preset: str = "trend2"
    holidays: frozenset = frozenset()
    workers: int = 1

    def __post_init__(self):
        _check_gaps(self.series)
        self.holidays = frozenset(self.holidays)

    def fit(self, cutoff: dt.date) -> Snapshot:
        """Fit trend and pair models on data strictly before ``cutoff``."""
        trend = fit_trend(self.series, self.weather, cutoff, self.preset)
        days = [d for d in self.series.dates() if d < cutoff]
        resid = {}
        for d in days:
            try:
                resid[d] = self.series.day(d) - trend.for_day(d)
            except MissingTrend:
                continue
        reg = fit_all_models(resid, self.spec, self.fit_config, self.weather, self.holidays,
                             before=cutoff, workers=self.workers)
        return Snapshot(cutoff, trend, reg)

    def observed_residual(self, snap: Snapshot, date: dt.date) -> np.ndarray:
        return self.series.day(date) - snap.trend.for_day(date)

    def forecast(self, snap: Snapshot, date: dt.date, horizon: int = 1,
                 kinds=("hybrid", "oracle", "baseline")) -> list[ForecastResult]:
        """Forecasts of ``date`` made ``horizon`` days ahead from ``snap``.

        The chain starts at ``date - horizon + 1`` from the last day observed
        before it; every day used as an observed input precedes the cutoff
        or the chain start, whichever is later.
        """
        start = date - dt.timedelta(days=horizon - 1)
        if start < snap.cutoff:
            raise ValueError("forecast chain starts before the snapshot cutoff")
        out = []
        flags = []
        if "hybrid" in kinds:
            try:
                x0 = self.observed_residual(snap, start - ONE_DAY)
                chain = forecast_multi_step(start, horizon, self.spec, snap.registry,
                                            snap.trend, x0, self.weather)
                out.append(chain[-1])
            except ModelUnavailable:
                flags.append("model_unavailable")
                fb = forecast_baseline(date, snap.registry, snap.trend)
                fb.kind = "hybrid"
                fb.step = horizon
                fb.flags += ["fallback_baseline"] + flags
                out.append(fb)
        if "oracle" in kinds and date in self.series:
            try:
                y = self.observed_residual(snap, date)
                o = forecast_oracle(date, y, snap.registry, snap.trend)
                o.step = horizon
                out.append(o)
            except ModelUnavailable:
                pass
        if "baseline" in kinds:
            b = forecast_baseline(date, snap.registry, snap.trend)
            b.step = horizon
            out.append(b)
        return out

    def run(self, dates: Iterable[dt.date], horizon: int = 1, cadence: str = "per-week",
            kinds=("hybrid", "oracle", "baseline"), origin: dt.date | None = None,
            snapshots: dict | None = None) -> tuple[list[ForecastResult], dict]:
        """Forecast every date, refitting per ``cadence``; returns (results, snapshots)."""
        dates = sorted(dates)
        origin = origin or dates[0]
        snapshots = {} if snapshots is None else snapshots
        out = []
        for d in dates:
            start = d - dt.timedelta(days=horizon - 1)
            cut = cutoff_for(start, cadence, origin)
            if cut not in snapshots:
                snapshots[cut] = self.fit(cut)
            out.extend(self.forecast(snapshots[cut], d, horizon, kinds))
        return out, snapshots


def audit_windows(results: Iterable[ForecastResult], snapshots: Mapping, cadence: str,
                  origin: dt.date, horizon: int = 1) -> list[str]:
    """Violations of the no-look-ahead rule: any training datum on or after
    the first day of the forecast chain that used it."""
    problems = []
    for r in results:
        start = r.date - dt.timedelta(days=horizon - 1)
        cut = cutoff_for(start, cadence, origin)
        snap = snapshots.get(cut)
        if snap is None:
            problems.append(f"{r.date}: no snapshot for cutoff {cut}")
            continue
        w = snap.windows() if hasattr(snap, "windows") else snap
        for key in ("last_pair_date", "last_gam_day"):
            v = w.get(key)
            if v is not None and v >= start:
                problems.append(f"{r.date}: {key}={v} not before chain start {start}")
        if w["cutoff"] > start:
            problems.append(f"{r.date}: cutoff {w['cutoff']} after chain start {start}")
    return problems
