"""Forecast error measures and the evaluation breakdowns by month and day type."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .calendar import classify_day


class ZeroDenominator(ValueError):
    pass


class AlignmentError(ValueError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(str(d) for d in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"no actuals for forecast dates: {shown}{more}")


def _pair(pred, truth):
    p = np.asarray(pred, dtype=float).ravel()
    t = np.asarray(truth, dtype=float).ravel()
    if p.shape != t.shape or p.size == 0:
        raise ValueError("pred and truth must be non-empty and of equal length")
    return p, t


def mape(pred, truth) -> float:
    """Mean absolute percentage error, as a fraction (0.02 means 2%)."""
    p, t = _pair(pred, truth)
    if np.any(t == 0):
        raise ZeroDenominator("truth contains zeros")
    return float(np.mean(np.abs(p - t) / np.abs(t)))


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    return float(np.sqrt(np.mean((p - t) ** 2)))


@dataclass
class DayError:
    date: dt.date
    mape: float
    rmse: float
    kind: str


@dataclass
class EvalReport:
    """Per-day errors and their unweighted means by group.

    ``overall`` averages per-day metrics (primary convention); ``pooled``
    pools every half-hour of every day into one MAPE/RMSE.
    """

    kind: str
    overall: dict
    pooled: dict
    by_month: dict  # month -> {"MAPE", "RMSE", "days"}
    by_day_type: dict  # day type -> {"MAPE", "RMSE", "days"}
    per_day: list = field(default_factory=list)


def _group(rows, key):
    out = {}
    for r in rows:
        out.setdefault(key(r), []).append(r)
    return {
        k: {"MAPE": float(np.mean([r.mape for r in v])),
            "RMSE": float(np.mean([r.rmse for r in v])),
            "days": len(v)}
        for k, v in sorted(out.items())
    }


def evaluate(forecasts: Iterable, actuals: Mapping[dt.date, np.ndarray],
             kind: str | None = None) -> EvalReport:
    """Score forecasts against actual daily curves.

    ``forecasts`` holds objects with ``date``, ``predicted`` (curve or
    array) and ``kind``; ``actuals`` maps each date to its observed values.
    """
    forecasts = list(forecasts)
    if kind is not None:
        forecasts = [f for f in forecasts if f.kind == kind]
    if not forecasts:
        raise ValueError("nothing to evaluate")
    missing = {f.date for f in forecasts if f.date not in actuals}
    if missing:
        raise AlignmentError(missing)
    rows = []
    pred_all, true_all = [], []
    for f in forecasts:
        p = np.asarray(getattr(f.predicted, "values", f.predicted), dtype=float)
        t = np.asarray(actuals[f.date], dtype=float)
        rows.append(DayError(f.date, mape(p, t), rmse(p, t), f.kind))
        pred_all.append(p)
        true_all.append(t)
    rows.sort(key=lambda r: (r.date, r.kind))
    overall = {"MAPE": float(np.mean([r.mape for r in rows])),
               "RMSE": float(np.mean([r.rmse for r in rows])),
               "days": len(rows)}
    P, T = np.concatenate(pred_all), np.concatenate(true_all)
    pooled = {"MAPE": mape(P, T), "RMSE": rmse(P, T)}
    kinds = {r.kind for r in rows}
    return EvalReport(
        kind=kinds.pop() if len(kinds) == 1 else "mixed",
        overall=overall,
        pooled=pooled,
        by_month=_group(rows, lambda r: r.date.month),
        by_day_type=_group(rows, lambda r: classify_day(r.date).day_type),
        per_day=rows,
    )


def format_table(reports: Mapping[str, EvalReport]) -> str:
    """Aligned text table of overall and per-month errors, one column per kind."""
    kinds = list(reports)
    lines = ["# aggregation: unweighted mean of per-day MAPE/RMSE over 48 half-hours"]
    head = f"{'group':<12}" + "".join(f"{k + ' MAPE%':>16}{k + ' RMSE':>16}" for k in kinds)
    lines.append(head)

    def row(label, getter):
        cells = []
        for k in kinds:
            g = getter(reports[k])
            if g is None:
                cells.append(f"{'-':>16}{'-':>16}")
            else:
                cells.append(f"{100 * g['MAPE']:>16.3f}{g['RMSE']:>16.1f}")
        return f"{label:<12}" + "".join(cells)

    lines.append(row("overall", lambda r: r.overall))
    lines.append(row("pooled", lambda r: r.pooled))
    for m in range(1, 13):
        lines.append(row(f"month {m:02d}", lambda r, m=m: r.by_month.get(m)))
    for t in range(8):
        lines.append(row(f"daytype {t}", lambda r, t=t: r.by_day_type.get(t)))
    return "\n".join(lines) + "\n"
