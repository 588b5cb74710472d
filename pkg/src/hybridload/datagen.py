"""Seeded synthetic load and weather scenarios with known ground truth.

Daily load = weekly trend + day-type profile + rank-r factor part + noise.
The factor scores follow a stationary diagonal VAR(1), so the population
cross-covariance between consecutive days' residual curves has exactly
``true_r`` nonzero singular values: with weighted-orthonormal loadings
``l_j``, score sd ``a_j`` and AR coefficient ``rho_j``,
``cov(Y_i, Y_{i-1}) = sum_j rho_j a_j**2 l_j (x) l_j``, so
``lambda_j = (rho_j a_j**2)**2``.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .calendar import classify_day, day_type, offset_code
from .curves import CurveSample, Grid, day_grid

N_SLOTS = 48


@dataclass(frozen=True)
class ScenarioConfig:
    years: int = 5
    seed: int = 0
    start: dt.date = dt.date(1996, 1, 1)
    base_load: float = 50000.0
    trend_slope: float = 600.0  # MW / year
    annual_amplitude: float = 12000.0  # MW between mid-winter and mid-summer weeks
    profile_amplitude: float = 6000.0
    day_profiles: np.ndarray | None = field(default=None, compare=False)
    true_r: int = 3
    factor_sd: tuple | None = None  # per-factor score sd (MW)
    factor_ar: tuple | None = None  # per-factor AR(1) coefficient
    noise_sd: float = 250.0
    temp_mean: float = 12.0
    temp_amplitude: float = 8.0
    temp_ar: float = 0.8
    temp_anomaly_sd: float = 2.5
    temp_diurnal: float = 3.0
    temp_load_coef: float = 0.0  # MW per degC of daily anomaly, along a fixed shape
    holiday_drop: float = 4000.0

    def __post_init__(self):
        if self.true_r < 1:
            raise ValueError("true_r must be at least 1")
        if self.years < 1:
            raise ValueError("years must be at least 1")
        sd = self.resolved_factor_sd()
        ar = self.resolved_factor_ar()
        if len(sd) != self.true_r or len(ar) != self.true_r:
            raise ValueError("factor_sd and factor_ar need true_r entries")
        if np.any(np.abs(ar) >= 1):
            raise ValueError("factor AR coefficients must lie inside (-1, 1)")
        if self.day_profiles is not None:
            p = np.asarray(self.day_profiles, dtype=float)
            if p.shape != (8, N_SLOTS):
                raise ValueError("day_profiles must be 8 curves of 48 points")
            if np.any(np.abs(p.mean(axis=1)) > 1e-8 * max(1.0, np.abs(p).max())):
                raise ValueError("day_profiles must be zero-mean")

    def resolved_factor_sd(self) -> np.ndarray:
        if self.factor_sd is not None:
            return np.asarray(self.factor_sd, dtype=float)
        return 1200.0 * 0.8 ** np.arange(self.true_r)

    def resolved_factor_ar(self) -> np.ndarray:
        if self.factor_ar is not None:
            return np.asarray(self.factor_ar, dtype=float)
        return np.full(self.true_r, 0.8)


def factor_loadings(r: int, grid: Grid | None = None) -> np.ndarray:
    """``r`` smooth zero-mean curves, orthonormal in the weighted inner product."""
    grid = grid or day_grid(N_SLOTS)
    u = grid.points
    cols = [np.ones_like(u)]
    k = 1
    while len(cols) < r + 1:
        cols.append(np.sin(2 * np.pi * k * u))
        if len(cols) < r + 1:
            cols.append(np.cos(2 * np.pi * k * u))
        k += 1
    A = np.array(cols).T * np.sqrt(grid.weights)[:, None]
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    L = (Q / np.sqrt(grid.weights)[:, None]).T
    return L[1: r + 1]


def default_day_profiles(amplitude: float = 6000.0) -> np.ndarray:
    u = np.arange(1, N_SLOTS + 1) / N_SLOTS
    hours = 24 * u

    def bump(c, w):
        return np.exp(-0.5 * ((hours - c) / w) ** 2)

    night = -bump(4.5, 2.5)
    weekday = 0.8 * bump(11.5, 2.5) + 1.0 * bump(19.0, 1.8) + night
    shapes = [
        weekday - 0.25 * bump(8.0, 1.5),  # Mon: slow start
        weekday,  # Tue-Thu
        weekday - 0.2 * bump(18.0, 2.5),  # Fri
        0.55 * bump(12.5, 3.0) + 0.7 * bump(19.5, 2.0) + night,  # Sat
        0.45 * bump(13.0, 2.5) + 0.6 * bump(19.5, 2.0) + 1.1 * night,  # Sun
        0.55 * bump(13.0, 2.5) + 0.3 * bump(20.5, 2.0) + night,  # Sun Jun-Jul
        0.35 * bump(13.0, 2.5) + 0.3 * bump(20.5, 2.0) + night,  # Sun Aug
        0.45 * bump(12.5, 2.5) + 0.9 * bump(18.5, 1.8) + 1.1 * night,  # Sun Dec
    ]
    out = np.array(shapes)
    out -= out.mean(axis=1, keepdims=True)
    return amplitude * out


def seasonal_shape(amplitude: float = 1500.0) -> np.ndarray:
    """Zero-mean shape moving the daily peak toward the evening in winter."""
    hours = 24 * np.arange(1, N_SLOTS + 1) / N_SLOTS
    s = np.exp(-0.5 * ((hours - 18.5) / 1.8) ** 2) - np.exp(-0.5 * ((hours - 12.5) / 2.0) ** 2)
    return amplitude * (s - s.mean())


def fixed_holidays(years) -> set[dt.date]:
    """Fixed-date French public holidays for the given years."""
    md = [(1, 1), (5, 1), (5, 8), (7, 14), (8, 15), (11, 1), (11, 11), (12, 25)]
    return {dt.date(y, m, d) for y in years for m, d in md}


@dataclass
class GroundTruth:
    config: ScenarioConfig
    dates: list
    weekly_trend: dict  # Monday -> MW
    daily_trend: np.ndarray  # (n_days,)
    residuals: np.ndarray  # (n_days, 48) load minus true weekly trend
    profile_part: np.ndarray
    factor_part: np.ndarray
    noise: np.ndarray
    factor_scores: np.ndarray  # (n_days, r)
    loadings: np.ndarray  # (r, 48)
    population_lambdas: np.ndarray
    holidays: set


def population_lambdas(cfg: ScenarioConfig) -> np.ndarray:
    sd, ar = cfg.resolved_factor_sd(), cfg.resolved_factor_ar()
    return np.sort((np.abs(ar) * sd**2) ** 2)[::-1]


def _ar1(rng, n, rho, sd, first=None):
    x = np.empty(n)
    x[0] = rng.normal(0, sd) if first is None else first
    innov = sd * np.sqrt(1 - rho**2)
    e = rng.normal(0, innov, n)
    for i in range(1, n):
        x[i] = rho * x[i - 1] + e[i]
    return x


def _simulate_factors(rng, n, sd, ar):
    r = sd.size
    a = np.empty((n, r))
    a[0] = rng.normal(0, sd)
    innov = sd * np.sqrt(1 - ar**2)
    e = rng.normal(0, 1, (n, r)) * innov
    for i in range(1, n):
        a[i] = ar * a[i - 1] + e[i]
    return a


def generate(cfg: ScenarioConfig):
    """Simulate a scenario; returns ``(load_series, weather, truth)``.

    Output is a pure function of ``cfg`` (including its seed).
    """
    from .pipeline import HalfHourlySeries, WeatherSeries

    rng = np.random.default_rng(cfg.seed)
    start = cfg.start
    end = dt.date(start.year + cfg.years, start.month, start.day)
    n_days = (end - start).days
    dates = [start + dt.timedelta(days=i) for i in range(n_days)]
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    hours = 24 * np.arange(1, N_SLOTS + 1) / N_SLOTS

    # weather: climatology + AR(1) anomaly, diurnal cycle; cloud in [0, 1]
    clim = cfg.temp_mean - cfg.temp_amplitude * np.cos(2 * np.pi * (doy - 15) / 365.25)
    anomaly = _ar1(rng, n_days, cfg.temp_ar, cfg.temp_anomaly_sd)
    diurnal = -cfg.temp_diurnal * np.cos(2 * np.pi * (hours - 3.0) / 24)
    temp = (clim + anomaly)[:, None] + diurnal[None, :]
    cloud_lat = 0.4 * np.cos(2 * np.pi * (doy - 15) / 365.25) + _ar1(rng, n_days, 0.6, 0.8)
    cloud_day = 1 / (1 + np.exp(-cloud_lat))
    cloud = np.clip(cloud_day[:, None] + rng.normal(0, 0.03, (n_days, N_SLOTS)), 0, 1)

    # weekly trend, constant within Monday-start weeks
    daily_mean_temp = temp.mean(axis=1)
    heat = cfg.annual_amplitude / (2 * cfg.temp_amplitude)
    offset_mw = 0.04 * cfg.annual_amplitude
    weekly_trend = {}
    daily_trend = np.empty(n_days)
    i = 0
    while i < n_days:
        monday = dates[i] - dt.timedelta(days=dates[i].weekday())
        j = min(n_days, i + 7 - dates[i].weekday())
        # the week's covariates come from its full 7 days where available
        lo = max(0, (monday - start).days)
        hi = min(n_days, lo + 7)
        tw = float(daily_mean_temp[lo:hi].mean())
        mid = monday + dt.timedelta(days=3)
        years = (mid - start).days / 365.25
        o = np.median([offset_code(monday + dt.timedelta(days=k)) for k in range(7)])
        value = (cfg.base_load + cfg.trend_slope * years
                 - heat * (tw - cfg.temp_mean)
                 + heat * max(tw - 20.0, 0.0)
                 + offset_mw * min(o, 0.0)
                 - offset_mw * (2 <= o <= 6))
        weekly_trend[monday] = value
        daily_trend[i:j] = value
        i = j

    profiles = default_day_profiles(cfg.profile_amplitude) if cfg.day_profiles is None \
        else np.asarray(cfg.day_profiles, dtype=float)
    season = np.cos(2 * np.pi * (doy - 15) / 365.25)
    holidays = fixed_holidays(range(start.year, end.year + 1))
    types = np.array([day_type(d) for d in dates])
    profile_part = profiles[types] + season[:, None] * seasonal_shape(0.25 * cfg.profile_amplitude)[None, :]
    hol = np.array([d in holidays for d in dates])
    # holidays look like a rest-of-year Sunday, shifted down
    profile_part[hol] = profiles[4] - cfg.holiday_drop

    grid = day_grid(N_SLOTS)
    L = factor_loadings(cfg.true_r, grid)
    sd, ar = cfg.resolved_factor_sd(), cfg.resolved_factor_ar()
    scores = _simulate_factors(rng, n_days, sd, ar)
    factor_part = scores @ L
    if cfg.temp_load_coef:
        shape = seasonal_shape(1.0)
        shape /= np.sqrt(np.sum(grid.weights * shape**2))
        factor_part = factor_part - cfg.temp_load_coef * anomaly[:, None] * shape[None, :]
    noise = rng.normal(0, cfg.noise_sd, (n_days, N_SLOTS)) if cfg.noise_sd > 0 \
        else np.zeros((n_days, N_SLOTS))
    residuals = profile_part + factor_part + noise
    load = daily_trend[:, None] + residuals

    series = HalfHourlySeries(start, load.ravel())
    weather = WeatherSeries(start, temp, cloud)
    truth = GroundTruth(cfg, dates, weekly_trend, daily_trend, residuals, profile_part,
                        factor_part, noise, scores, L, population_lambdas(cfg), holidays)
    return series, weather, truth


def generate_curve_pairs(n: int, true_r: int = 3, seed: int = 0, noise_sd: float = 250.0,
                         factor_sd=None, factor_ar=None, burn_in: int = 50):
    """Consecutive-day pairs (X_i = Y_{i-1}, Y_i) from the factor model alone.

    Returns ``(sample, population_lambdas)``; the curves carry no calendar
    or trend, only the rank-``true_r`` dynamics plus white noise.
    """
    cfg = ScenarioConfig(true_r=true_r, factor_sd=factor_sd, factor_ar=factor_ar,
                         noise_sd=noise_sd, seed=seed)
    rng = np.random.default_rng(seed)
    grid = day_grid(N_SLOTS)
    L = factor_loadings(true_r, grid)
    a = _simulate_factors(rng, n + 1 + burn_in, cfg.resolved_factor_sd(),
                          cfg.resolved_factor_ar())[burn_in:]
    curves = a @ L + rng.normal(0, noise_sd, (n + 1, N_SLOTS))
    sample = CurveSample(grid, grid, curves[1:], curves[:-1])
    return sample, population_lambdas(cfg)
