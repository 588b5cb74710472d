"""Additive model for weekly average load with penalized regression splines.

Univariate smooths use cubic B-splines with a second-order difference
penalty; bivariate smooths use the row-wise tensor product of two such bases
with the penalty ``S1 (x) I + I (x) S2``. Every smooth is centered over the
training data (sum-to-zero constraint absorbed by a QR null-space basis), so
the intercept carries the level. Smoothing parameters are chosen by GCV on a
log grid with coordinate descent.
"""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .metrics import mape, rmse

log = logging.getLogger(__name__)

COVARIATES = ("t", "O", "L_prev", "T", "T_prev", "C", "I")


class DegenerateCovariate(ValueError):
    pass


@dataclass(frozen=True)
class WeeklyRecord:
    t: int
    L: float
    L_prev: float
    O: float
    T: float
    T_prev: float
    C: float
    I: int
    week_start: dt.date | None = None

    def __post_init__(self):
        if not 1 <= self.I <= 53:
            raise ValueError(f"week-of-year index {self.I} outside 1..53")
        if not -3 <= self.O <= 7:
            raise ValueError(f"offset {self.O} outside -3..7")
        if not self.L > 0:
            raise ValueError(f"weekly load must be positive, got {self.L}")


def records_to_columns(records: Sequence[WeeklyRecord] | Mapping) -> dict:
    if isinstance(records, Mapping):
        return {k: np.asarray(v, dtype=float) for k, v in records.items()}
    if not records:
        raise ValueError("no records")
    names = [f.name for f in fields(WeeklyRecord) if f.name != "week_start"]
    return {k: np.array([getattr(r, k) for r in records], dtype=float) for k in names}


# -- bases ------------------------------------------------------------------------

@dataclass(frozen=True)
class Marginal:
    """Cubic B-spline basis on ``[lo, hi]`` with linear extension outside."""

    knots: np.ndarray  # full knot vector
    lo: float
    hi: float
    clip_hi: float | None = None

    DEGREE = 3

    @classmethod
    def build(cls, x, basis_dim: int | None = None, interior=None,
              clip_hi: float | None = None) -> "Marginal":
        x = np.asarray(x, dtype=float)
        if clip_hi is not None:
            x = np.minimum(x, clip_hi)
        lo, hi = float(x.min()), float(x.max())
        if hi <= lo:
            raise DegenerateCovariate("covariate is constant over the training data")
        if interior is None:
            n_int = basis_dim - cls.DEGREE - 1
            if n_int < 0:
                raise ValueError("basis_dim must be at least 4 for cubic splines")
            interior = np.linspace(lo, hi, n_int + 2)[1:-1]
        else:
            interior = np.sort(np.asarray(interior, dtype=float))
            interior = interior[(interior > lo) & (interior < hi)]
        k = cls.DEGREE
        t = np.concatenate([[lo] * (k + 1), interior, [hi] * (k + 1)])
        return cls(t, lo, hi, clip_hi)

    @property
    def dim(self) -> int:
        return self.knots.size - self.DEGREE - 1

    def _spline(self):
        return BSpline(self.knots, np.eye(self.dim), self.DEGREE, extrapolate=False)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.clip_hi is not None:
            x = np.minimum(x, self.clip_hi)
        xc = np.clip(x, self.lo, self.hi)
        spl = self._spline()
        B = spl(xc)
        out = x != xc
        if np.any(out):
            dB = spl.derivative()(xc[out])
            B[out] += (x[out] - xc[out])[:, None] * dB
        return np.nan_to_num(B)

    def greville(self) -> np.ndarray:
        k = self.DEGREE
        return np.array([self.knots[i + 1:i + k + 1].mean() for i in range(self.dim)])

    def penalty(self) -> np.ndarray:
        """Second divided differences of the coefficients over the Greville
        abscissae, so linear functions carry no penalty for any knot layout."""
        g = self.greville()
        g = (g - g[0]) / (g[-1] - g[0])
        D1 = np.diff(np.eye(self.dim), axis=0) / np.diff(g)[:, None]
        D = np.diff(D1, axis=0)
        return D.T @ D

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "lo": self.lo, "hi": self.hi,
                "clip_hi": self.clip_hi}

    @classmethod
    def from_dict(cls, d) -> "Marginal":
        return cls(np.asarray(d["knots"], dtype=float), d["lo"], d["hi"], d["clip_hi"])


@dataclass(frozen=True)
class SmoothTerm:
    """Specification of one smooth: covariate names, basis size, knots.

    ``basis_dim`` is an int for univariate terms and a pair for bivariate
    tensor terms. ``knots`` optionally fixes the interior knots of a
    univariate term (then ``basis_dim`` is implied).
    """

    covariates: tuple
    basis_dim: int | tuple = 10
    knots: tuple | None = None
    lambda_smooth: float | None = None

    def __post_init__(self):
        cov = tuple(self.covariates) if not isinstance(self.covariates, str) else (self.covariates,)
        object.__setattr__(self, "covariates", cov)
        if len(cov) not in (1, 2):
            raise ValueError("smooth terms take one or two covariates")
        if len(cov) == 1 and self.knots is None and int(self.basis_dim) < 4:
            raise ValueError("univariate basis_dim must be at least 4 for cubic splines")
        if len(cov) == 2:
            dims = tuple(self.basis_dim) if np.ndim(self.basis_dim) else (self.basis_dim,) * 2
            if dims[0] * dims[1] < 9 or min(dims) < 4:
                raise ValueError("tensor terms need marginal dims >= 4")
            object.__setattr__(self, "basis_dim", dims)

    @property
    def kind(self) -> str:
        return "univariate" if len(self.covariates) == 1 else "bivariate"

    @property
    def label(self) -> str:
        return "s(" + ",".join(self.covariates) + ")"

    def to_dict(self) -> dict:
        return {"covariates": list(self.covariates),
                "basis_dim": list(self.basis_dim) if isinstance(self.basis_dim, tuple) else self.basis_dim,
                "knots": None if self.knots is None else list(self.knots),
                "lambda_smooth": self.lambda_smooth}

    @classmethod
    def from_dict(cls, d) -> "SmoothTerm":
        bd = d["basis_dim"]
        return cls(tuple(d["covariates"]), tuple(bd) if isinstance(bd, list) else bd,
                   None if d["knots"] is None else tuple(d["knots"]), d["lambda_smooth"])


def _clip_for(name: str):
    # week 53 is rare: it shares the boundary basis support of week 52
    return 52.0 if name == "I" else None


@dataclass(frozen=True)
class FittedBasis:
    term: SmoothTerm
    marginals: tuple
    Z: np.ndarray  # centering null-space basis, (raw_dim, raw_dim - 1)

    def raw(self, cols: Mapping) -> np.ndarray:
        Bs = [m.evaluate(cols[c]) for m, c in zip(self.marginals, self.term.covariates)]
        if len(Bs) == 1:
            return Bs[0]
        B1, B2 = Bs
        return (B1[:, :, None] * B2[:, None, :]).reshape(B1.shape[0], -1)

    def design(self, cols: Mapping) -> np.ndarray:
        return self.raw(cols) @ self.Z

    def raw_penalty(self) -> np.ndarray:
        if len(self.marginals) == 1:
            return self.marginals[0].penalty()
        S1, S2 = (m.penalty() for m in self.marginals)
        I1, I2 = np.eye(S1.shape[0]), np.eye(S2.shape[0])
        return np.kron(S1, I2) + np.kron(I1, S2)

    def penalty(self) -> np.ndarray:
        S = self.Z.T @ self.raw_penalty() @ self.Z
        return 0.5 * (S + S.T)

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def to_dict(self) -> dict:
        return {"term": self.term.to_dict(),
                "marginals": [m.to_dict() for m in self.marginals],
                "Z": self.Z.tolist()}

    @classmethod
    def from_dict(cls, d) -> "FittedBasis":
        return cls(SmoothTerm.from_dict(d["term"]),
                   tuple(Marginal.from_dict(m) for m in d["marginals"]),
                   np.asarray(d["Z"], dtype=float))


def _build_basis(cols: Mapping, term: SmoothTerm) -> FittedBasis:
    margs = []
    for i, c in enumerate(term.covariates):
        if c not in cols:
            raise KeyError(f"covariate {c!r} missing from the data")
        if term.kind == "univariate":
            m = Marginal.build(cols[c], basis_dim=term.basis_dim, interior=term.knots,
                               clip_hi=_clip_for(c))
        else:
            m = Marginal.build(cols[c], basis_dim=term.basis_dim[i], clip_hi=_clip_for(c))
        margs.append(m)
    tmp = FittedBasis(term, tuple(margs), np.eye(1))
    B = tmp.raw(cols)
    C = B.sum(axis=0, keepdims=True)
    Q, _ = np.linalg.qr(C.T, mode="complete")
    return FittedBasis(term, tuple(margs), Q[:, 1:])


@dataclass
class Design:
    X: np.ndarray
    penalties: list  # (slice, S) per term, in full-coefficient coordinates
    bases: list


def build_design(records, terms: Sequence[SmoothTerm]) -> Design:
    """Intercept column followed by the centered basis of each term."""
    cols = records_to_columns(records)
    bases = [_build_basis(cols, t) for t in terms]
    blocks = [np.ones((len(next(iter(cols.values()))), 1))]
    pens = []
    start = 1
    for b in bases:
        Xb = b.design(cols)
        blocks.append(Xb)
        pens.append((slice(start, start + Xb.shape[1]), b.penalty()))
        start += Xb.shape[1]
    return Design(np.hstack(blocks), pens, bases)


# -- fitting ----------------------------------------------------------------------

@dataclass
class GamModel:
    bases: list
    coefficients: np.ndarray
    lambdas: np.ndarray
    gcv: float
    edf: float
    pct_explained: float
    fitted_in_sample: dict
    response: str = "L"
    n: int = 0
    flags: list = field(default_factory=list)
    train_range: dict = field(default_factory=dict)

    @property
    def terms(self) -> list:
        return [replace(b.term, lambda_smooth=float(l)) for b, l in zip(self.bases, self.lambdas)]

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])

    def _slices(self):
        start = 1
        for b in self.bases:
            yield slice(start, start + b.dim), b
            start += b.dim

    def term_effect(self, i: int, records) -> np.ndarray:
        cols = records_to_columns(records)
        sl, b = list(self._slices())[i]
        return b.design(cols) @ self.coefficients[sl]

    def predict(self, records) -> np.ndarray:
        cols = records_to_columns(records)
        out = np.full(len(next(iter(cols.values()))), self.intercept)
        for sl, b in self._slices():
            out += b.design(cols) @ self.coefficients[sl]
        return out

    def predict_record(self, record: WeeklyRecord) -> float:
        return float(self.predict([record])[0])

    def extrapolating(self, record: WeeklyRecord) -> list[str]:
        """Covariates of ``record`` that fall outside the training range."""
        out = []
        for name, (lo, hi) in self.train_range.items():
            v = getattr(record, name)
            if v < lo or v > hi:
                out.append(name)
        return out

    def to_dict(self) -> dict:
        return {"bases": [b.to_dict() for b in self.bases],
                "coefficients": self.coefficients.tolist(),
                "lambdas": self.lambdas.tolist(), "gcv": self.gcv, "edf": self.edf,
                "pct_explained": self.pct_explained,
                "fitted_in_sample": self.fitted_in_sample, "response": self.response,
                "n": self.n, "flags": list(self.flags),
                "train_range": {k: list(v) for k, v in self.train_range.items()}}

    @classmethod
    def from_dict(cls, d) -> "GamModel":
        return cls([FittedBasis.from_dict(b) for b in d["bases"]],
                   np.asarray(d["coefficients"], dtype=float),
                   np.asarray(d["lambdas"], dtype=float), d["gcv"], d["edf"],
                   d["pct_explained"], d["fitted_in_sample"], d["response"], d["n"],
                   list(d["flags"]), {k: tuple(v) for k, v in d["train_range"].items()})


class _PenalizedLS:
    def __init__(self, design: Design, y: np.ndarray):
        self.X = design.X
        self.y = y
        self.XtX = self.X.T @ self.X
        self.Xty = self.X.T @ y
        self.n, self.p = self.X.shape
        self.pens = design.penalties
        self.jittered = False
        # scale each penalty to the data so one log grid fits all terms
        self.scales = np.array([
            np.trace(self.XtX[sl, sl]) / max(np.trace(S), 1e-300) for sl, S in self.pens
        ])

    def solve(self, lambdas):
        A = self.XtX.copy()
        for (sl, S), lam, s in zip(self.pens, lambdas, self.scales):
            A[sl, sl] += lam * s * S
            # tensor terms sharing a covariate overlap in their penalty null
            # spaces; a tiny ridge keeps the system definite
            A[sl, sl][np.diag_indices(S.shape[0])] += RIDGE * s * np.trace(S) / S.shape[0]
        try:
            cf = cho_factor(A)
        except LinAlgError:
            self.jittered = True
            A[np.diag_indices_from(A)] += 1e-10 * np.trace(A) / self.p
            cf = cho_factor(A)
        beta = cho_solve(cf, self.Xty)
        edf = float(np.trace(cho_solve(cf, self.XtX)))
        resid = self.y - self.X @ beta
        rss = float(resid @ resid)
        gcv = self.n * rss / (self.n - edf) ** 2 if edf < self.n else np.inf
        return beta, edf, rss, gcv


LOG_LAMBDA_GRID = np.linspace(-6.0, 6.0, 30)
RIDGE = 1e-8


def fit_gam(records, terms: Sequence[SmoothTerm], response: str = "L",
            y=None, lambdas=None, grid=LOG_LAMBDA_GRID, sweeps: int = 2) -> GamModel:
    """Fit the additive model, choosing smoothing parameters by GCV.

    ``lambdas`` (relative smoothing parameters, one per term) skips the
    search; terms with ``lambda_smooth`` set are held at that value.
    GCV = n * RSS / (n - tr(H))**2.
    """
    cols = records_to_columns(records)
    y = np.asarray(cols[response] if y is None else y, dtype=float)
    design = build_design(cols, terms)
    if design.X.shape[0] <= len(terms) + 1:
        raise ValueError("too few records for the requested terms")
    pls = _PenalizedLS(design, y)
    grid = np.asarray(grid, dtype=float)
    if lambdas is not None:
        lam = np.asarray(lambdas, dtype=float)
        best = (pls.solve(lam), lam)
    else:
        fixed = [t.lambda_smooth for t in terms]
        lam = np.array([f if f is not None else 10 ** grid[len(grid) // 2] for f in fixed])
        res = pls.solve(lam)
        best = (res, lam.copy())
        for _ in range(sweeps):
            for j in range(len(terms)):
                if fixed[j] is not None:
                    continue
                for g in grid:
                    trial = best[1].copy()
                    trial[j] = 10 ** g
                    res = pls.solve(trial)
                    if res[3] < best[0][3]:
                        best = (res, trial)
    (beta, edf, rss, gcv), lam = best
    fitted = design.X @ beta
    tss = float(np.sum((y - y.mean()) ** 2))
    flags = ["ridge_jitter"] if pls.jittered else []
    if pls.jittered:
        log.warning("penalized normal equations needed ridge jitter")
    fis = {"RMSE": rmse(fitted, y)}
    if np.all(y != 0):
        fis["MAPE"] = mape(fitted, y)
    ranges = {c: (float(cols[c].min()), float(cols[c].max()))
              for t in terms for c in t.covariates}
    return GamModel(design.bases, beta, np.asarray(lam, dtype=float), float(gcv), edf,
                    1.0 - rss / tss if tss > 0 else 1.0, fis, response, len(y), flags,
                    ranges)


def predict_gam(model: GamModel, record: WeeklyRecord) -> float:
    return model.predict_record(record)


# -- presets ----------------------------------------------------------------------

def september_knots(records: Sequence[WeeklyRecord]) -> list[float]:
    """Week indices of the weeks containing September 1st."""
    out = []
    for r in records:
        if r.week_start is None:
            continue
        end = r.week_start + dt.timedelta(days=6)
        for year in {r.week_start.year, end.year}:
            if r.week_start <= dt.date(year, 9, 1) <= end:
                out.append(float(r.t))
    return sorted(set(out))


def trend_terms(preset: str, records: Sequence[WeeklyRecord] | None = None) -> list[SmoothTerm]:
    """Term sets of the two weekly trend models.

    ``trend1``: f1(t) + f2(O) + f3(L_prev) + f4(T) + f5(T_prev) + f6(C).
    ``trend2``: as ``trend1`` with the last four smooths made bivariate in
    the week-of-year index I.
    """
    knots = september_knots(records) if records else []
    if len(knots) >= 1:
        f1 = SmoothTerm(("t",), knots=tuple(knots))
    else:
        f1 = SmoothTerm(("t",), basis_dim=10)
    f2 = SmoothTerm(("O",), basis_dim=6)
    if preset == "trend1":
        rest = [SmoothTerm((c,), basis_dim=8) for c in ("L_prev", "T", "T_prev", "C")]
    elif preset == "trend2":
        rest = [SmoothTerm((c, "I"), basis_dim=(5, 6)) for c in ("L_prev", "T", "T_prev", "C")]
    else:
        raise ValueError(f"unknown trend preset {preset!r}")
    return [f1, f2, *rest]


@dataclass
class ComparisonReport:
    rows: dict  # name -> metrics dict

    def winner_by_gcv(self) -> str:
        return min(self.rows, key=lambda k: self.rows[k]["gcv"])


def compare_models(records: Sequence[WeeklyRecord], spec1, spec2,
                   holdout: int = 0, names=("model1", "model2")) -> ComparisonReport:
    """Fit two term sets on the same records and report GCV and errors.

    The last ``holdout`` records are kept out of fitting and scored as
    forecasts.
    """
    records = list(records)
    train = records[: len(records) - holdout] if holdout else records
    test = records[len(records) - holdout:] if holdout else []
    rows = {}
    for name, spec in zip(names, (spec1, spec2)):
        terms = trend_terms(spec, train) if isinstance(spec, str) else list(spec)
        m = fit_gam(train, terms)
        row = {"gcv": m.gcv, "pct_explained": m.pct_explained, "edf": m.edf,
               "in_MAPE": m.fitted_in_sample.get("MAPE"), "in_RMSE": m.fitted_in_sample["RMSE"]}
        if test:
            pred = m.predict(test)
            truth = np.array([r.L for r in test])
            row.update(out_MAPE=mape(pred, truth), out_RMSE=rmse(pred, truth))
        rows[name] = row
    return ComparisonReport(rows)
