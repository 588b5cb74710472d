"""Versioned, checksummed JSON model store.

Floats are written with ``repr`` precision by :mod:`json`, so a loaded store
reproduces predictions bit for bit.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
from pathlib import Path

import numpy as np

from .calendar import DayClass
from .curves import Grid, SegmentStats
from .gam import GamModel
from .pipeline import ModelRegistry, PairModel, RegressorSpec, Snapshot, TrendModel, WeekInfo
from .svdreg import CrossCovModel, CurveRegressionModel

FORMAT = "hybridload-store"
VERSION = 1


class StoreError(ValueError):
    pass


def _d(x):
    return None if x is None else x.isoformat()


def _date(s):
    return None if s is None else dt.date.fromisoformat(s)


def _grid_to(g: Grid) -> dict:
    return {"points": g.points.tolist(), "weights": g.weights.tolist(),
            "segments": [list(s) for s in g.segments]}


def _grid_from(d) -> Grid:
    return Grid(np.asarray(d["points"]), np.asarray(d["weights"]),
                tuple(tuple(s) for s in d["segments"]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def regression_to_dict(m: CurveRegressionModel) -> dict:
    cc = m.cross_cov
    return {
        "grid_y": _grid_to(cc.grid_y), "grid_x": _grid_to(cc.grid_x),
        "mean_y": cc.mean_y.tolist(), "mean_x": cc.mean_x.tolist(),
        "lambdas": cc.lambdas.tolist(),
        "phis": cc.phis[: m.r_hat].tolist(), "psis": cc.psis[: m.K].tolist(),
        "n": cc.n, "r_hat": m.r_hat, "K": m.K, "betas": m.betas.tolist(),
        "residual_variances": m.residual_variances.tolist(),
        "diagnostics": _jsonable(m.diagnostics),
    }


def regression_from_dict(d) -> CurveRegressionModel:
    cc = CrossCovModel(_grid_from(d["grid_y"]), _grid_from(d["grid_x"]),
                       np.asarray(d["mean_y"]), np.asarray(d["mean_x"]),
                       np.asarray(d["lambdas"]), np.asarray(d["phis"]).reshape(d["r_hat"], -1),
                       np.asarray(d["psis"]).reshape(d["K"], -1), d["n"])
    return CurveRegressionModel(cc, d["r_hat"], d["K"],
                                np.asarray(d["betas"]).reshape(d["r_hat"], d["K"]),
                                np.asarray(d["residual_variances"]), d["diagnostics"])


def _pair_to(pm: PairModel) -> dict:
    return {"prev": pm.prev.key(), "target": pm.target.key(),
            "parts": {k: regression_to_dict(v) for k, v in pm.parts.items()},
            "stats": {k: None if v is None else v.to_dict() for k, v in pm.stats.items()},
            "n_train": pm.n_train, "last_date": _d(pm.last_date)}


def _pair_from(d) -> PairModel:
    return PairModel(DayClass.parse(d["prev"]), DayClass.parse(d["target"]),
                     {k: regression_from_dict(v) for k, v in d["parts"].items()},
                     {k: None if v is None else SegmentStats(**v) for k, v in d["stats"].items()},
                     d["n_train"], _date(d["last_date"]))


def snapshot_to_dict(s: Snapshot) -> dict:
    tr, reg = s.trend, s.registry
    return {
        "cutoff": _d(s.cutoff),
        "trend": {
            "gam": tr.gam.to_dict(),
            "weeks": [[_d(w.week_start), w.t, w.I, w.O, w.T, w.C,
                       None if not np.isfinite(w.L) else w.L] for w in tr.weeks.values()],
            "cutoff": _d(tr.cutoff), "last_train_week": _d(tr.last_train_week),
            "cache": [[_d(k), v] for k, v in sorted(tr._cache.items())],
        },
        "registry": {
            "variant": reg.spec.variant,
            "models": [_pair_to(m) for _, m in sorted(reg.models.items())],
            "class_means": [[c.key(), v.tolist()] for c, v in sorted(reg.class_means.items())],
            "cutoff": _d(reg.cutoff),
            "absent": [[p.key(), t.key(), n] for (p, t), n in sorted(reg.absent.items())],
            "realized": [[p.key(), t.key()] for p, t in sorted(reg.realized)],
        },
        "windows": {k: _d(v) for k, v in s.windows().items()},
    }


def snapshot_from_dict(d) -> Snapshot:
    t = d["trend"]
    weeks = {}
    for ws, tt, I, O, T, C, L in t["weeks"]:
        w = WeekInfo(_date(ws), tt, I, O, T, C, np.nan if L is None else L)
        weeks[w.week_start] = w
    trend = TrendModel(GamModel.from_dict(t["gam"]), weeks, _date(t["cutoff"]),
                       _date(t["last_train_week"]))
    trend._cache.update({_date(k): v for k, v in t["cache"]})
    r = d["registry"]
    models = {}
    for pd in r["models"]:
        pm = _pair_from(pd)
        models[(pm.prev, pm.target)] = pm
    reg = ModelRegistry(
        RegressorSpec(r["variant"]), models,
        {DayClass.parse(k): np.asarray(v) for k, v in r["class_means"]},
        _date(r["cutoff"]),
        {(DayClass.parse(p), DayClass.parse(q)): n for p, q, n in r["absent"]},
        frozenset((DayClass.parse(p), DayClass.parse(q)) for p, q in r["realized"]),
    )
    return Snapshot(_date(d["cutoff"]), trend, reg)


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def save_store(path, snapshots: dict, meta: dict) -> None:
    payload = {"meta": _jsonable(meta),
               "snapshots": [snapshot_to_dict(s) for _, s in sorted(snapshots.items())]}
    body = _canonical(payload)
    doc = {"format": FORMAT, "version": VERSION,
           "checksum": hashlib.sha256(body.encode()).hexdigest(), "payload": payload}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n",
                          encoding="utf-8")


def load_store(path) -> tuple[dict, dict]:
    """Returns ``(snapshots by cutoff, meta)``; raises StoreError on any defect."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StoreError(f"cannot read model store {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise StoreError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise StoreError(f"store version {doc.get('version')!r} unsupported (expected {VERSION})")
    payload = doc.get("payload")
    if hashlib.sha256(_canonical(payload).encode()).hexdigest() != doc.get("checksum"):
        raise StoreError(f"checksum mismatch in {path}: store is corrupted")
    try:
        snaps = [snapshot_from_dict(s) for s in payload["snapshots"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreError(f"malformed store {path}: {exc}") from exc
    return {s.cutoff: s for s in snaps}, payload["meta"]
