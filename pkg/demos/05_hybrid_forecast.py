"""
Day-ahead forecasts with the hybrid model
=========================================

The weekly trend is removed from the half-hourly loads, the residual day
curves are grouped by calendar class pairs, and each pair gets its own
curve regression. Forecasts are compared with the oracle (an upper bound)
and the class-mean baseline.
"""
import datetime as dt

from hybridload import (FitConfig, HybridForecaster, RegressorSpec, ScenarioConfig, evaluate,
                        generate)
from hybridload.metrics import format_table
from hybridload.pipeline import audit_windows

series, weather, truth = generate(ScenarioConfig(years=5, seed=1))
fc = HybridForecaster(series, weather, RegressorSpec("H2"), FitConfig(), "trend2",
                      truth.holidays)

# eight weeks of spring 2000, refitting once a week
first = dt.date(2000, 3, 6)
dates = [first + dt.timedelta(days=i) for i in range(56)]
dates = [d for d in dates if d not in truth.holidays]
results, snaps = fc.run(dates, horizon=1, cadence="per-week")
print(len(snaps), "weekly refits")

actual = {d: series.day(d) for d in dates}
reports = {k: evaluate(results, actual, kind=k) for k in ("hybrid", "oracle", "baseline")}
print(format_table(reports))

# every training window ends before the day it forecasts
print("look-ahead violations:", len(audit_windows(results, snaps, "per-week", dates[0])))
