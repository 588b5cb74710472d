"""Curve-on-curve linear regression through the SVD of the cross-covariance.

The cross-covariance kernel of centered responses and regressors is
discretized on the two quadrature grids. With diagonal weight matrices
``W1``, ``W2`` the operator SVD becomes the matrix SVD of
``W1^(1/2) S W2^(1/2)``; mapping the singular vectors back by ``W^(-1/2)``
gives bases that are orthonormal in the weighted inner product.

Projecting responses on the left basis and regressors on the right basis
turns the curve regression into ``r`` scalar least-squares problems.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .curves import Curve, CurveSample, Grid, GridMismatch

log = logging.getLogger(__name__)

Method = Literal["ratio", "ic1", "ic2", "ic_majority", "fixed"]


class DimensionTooLarge(ValueError):
    pass


class AllZeroSpectrum(ValueError):
    pass


@dataclass(frozen=True)
class CrossCovModel:
    grid_y: Grid
    grid_x: Grid
    mean_y: np.ndarray
    mean_x: np.ndarray
    lambdas: np.ndarray
    phis: np.ndarray  # (d, len(grid_y)); row j is phi_j
    psis: np.ndarray  # (d, len(grid_x))
    n: int

    @property
    def d(self) -> int:
        return self.lambdas.size

    def phi(self, j: int) -> Curve:
        return Curve(self.grid_y, self.phis[j])

    def psi(self, k: int) -> Curve:
        return Curve(self.grid_x, self.psis[k])

    def response_scores(self, Y: np.ndarray, upto: int | None = None) -> np.ndarray:
        """Scores of (rows of) ``Y`` on the left basis."""
        B = self.phis if upto is None else self.phis[:upto]
        return (np.asarray(Y) - self.mean_y) @ (B * self.grid_y.weights).T

    def regressor_scores(self, X: np.ndarray, upto: int | None = None) -> np.ndarray:
        B = self.psis if upto is None else self.psis[:upto]
        return (np.asarray(X) - self.mean_x) @ (B * self.grid_x.weights).T


def estimate_cross_cov(sample: CurveSample, d: int | None = None) -> CrossCovModel:
    """Sample cross-covariance and its weighted SVD, keeping ``d`` triples.

    ``lambdas`` are the squared singular values, i.e. the eigenvalues of
    ``M1(u, u') = int S(u, v) S(u', v) dv``.
    """
    n = sample.n
    m1, m2 = len(sample.grid_y), len(sample.grid_x)
    dmax = min(m1, m2, n)
    if d is None:
        d = dmax
    if d < 1 or d > dmax:
        raise DimensionTooLarge(f"d={d} exceeds min(|G1|, |G2|, n) = {dmax}")
    mean_y = sample.Y.mean(axis=0)
    mean_x = sample.X.mean(axis=0)
    Yc = sample.Y - mean_y
    Xc = sample.X - mean_x
    S = Yc.T @ Xc / n
    s1 = np.sqrt(sample.grid_y.weights)
    s2 = np.sqrt(sample.grid_x.weights)
    U, sv, Vt = np.linalg.svd(s1[:, None] * S * s2[None, :], full_matrices=False)
    U, sv, Vt = U[:, :d], sv[:d], Vt[:d]
    phis = (U / s1[:, None]).T
    psis = Vt / s2[None, :]
    # deterministic signs: largest-magnitude coordinate of each phi positive
    idx = np.argmax(np.abs(phis), axis=1)
    signs = np.sign(phis[np.arange(d), idx])
    signs[signs == 0] = 1.0
    # C order keeps matmul results identical to a reloaded model
    phis = np.ascontiguousarray(phis * signs[:, None])
    psis = np.ascontiguousarray(psis * signs[:, None])
    lambdas = np.clip(sv**2, 0.0, None)
    return CrossCovModel(sample.grid_y, sample.grid_x, mean_y, mean_x,
                         lambdas, phis, psis, n)


def cross_cov_matrix(sample: CurveSample) -> np.ndarray:
    Yc = sample.Y - sample.Y.mean(axis=0)
    Xc = sample.X - sample.X.mean(axis=0)
    return Yc.T @ Xc / sample.n


def scores(curve: Curve, basis: list[Curve], mean: Curve) -> np.ndarray:
    """Inner products of ``curve - mean`` with each basis curve."""
    if curve.grid != mean.grid or any(b.grid != curve.grid for b in basis):
        raise GridMismatch("curve, mean and basis must share one grid")
    w = curve.grid.weights
    c = curve.values - mean.values
    return np.array([np.sum(w * c * b.values) for b in basis])


# -- correlation dimension ----------------------------------------------------

@dataclass(frozen=True)
class DimSelectConfig:
    """Settings for choosing the correlation dimension.

    ``c_star`` and ``d`` default to data-dependent values when left as
    ``None``: ``c_star = 1e-3 * lambda_1 / d**2`` and
    ``d = min(20, n - 1, |G1|, |G2|)``. ``fixed_r`` is only read when
    ``method == "fixed"``.
    """

    method: Method = "ic_majority"
    d: int | None = None
    c_star: float | None = None
    tau_grid_size: int = 100
    g_exponent: float = -0.5
    fixed_r: int | None = None

    def __post_init__(self):
        if self.method not in ("ratio", "ic1", "ic2", "ic_majority", "fixed"):
            raise ValueError(f"unknown dimension-selection method {self.method!r}")
        if self.d is not None and self.d < 2:
            raise ValueError("d must be at least 2")
        if self.c_star is not None and self.c_star <= 0:
            raise ValueError("c_star must be positive")
        if self.tau_grid_size < 2:
            raise ValueError("tau_grid_size must be at least 2")
        if self.method == "fixed" and (self.fixed_r is None or self.fixed_r < 1):
            raise ValueError("method 'fixed' needs fixed_r >= 1")

    def resolve_d(self, n: int, m1: int, m2: int) -> int:
        cap = min(n - 1, m1, m2)
        d = min(20, cap) if self.d is None else min(self.d, cap)
        return max(d, 1)

    def g(self, n: int) -> float:
        return float(n) ** self.g_exponent

    def to_dict(self) -> dict:
        return dict(method=self.method, d=self.d, c_star=self.c_star,
                    tau_grid_size=self.tau_grid_size, g_exponent=self.g_exponent,
                    fixed_r=self.fixed_r)


def select_dim_ratio(lambdas, d: int) -> int:
    """argmin over 1 <= j <= d of lambda_{j+1} / lambda_j.

    Denominators below ``1e-12 * lambda_1`` are clamped to that floor. Ties
    go to the smallest j. Eigenvalues past the end of ``lambdas`` count as 0.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0 or lam[0] <= 0:
        raise AllZeroSpectrum("largest eigenvalue is not positive")
    if d < 1:
        raise ValueError("d must be at least 1")
    if lam.size < d + 1:
        lam = np.concatenate([lam, np.zeros(d + 1 - lam.size)])
    floor = 1e-12 * lam[0]
    num = np.clip(lam[1:d + 1], 0.0, None)
    den = np.maximum(lam[:d], floor)
    ratios = num / den
    return int(np.argmin(ratios)) + 1


def ic_values(lambdas, n: int, d: int, tau: float, variant: str = "ic2",
              c_star: float | None = None, g_exponent: float = -0.5) -> np.ndarray:
    """IC(q) for q = 0, ..., d-1."""
    lam = np.clip(np.asarray(lambdas, dtype=float)[:d], 0.0, None)
    if lam.size < d:
        lam = np.concatenate([lam, np.zeros(d - lam.size)])
    tail = np.cumsum(lam[::-1])[::-1] / d**2  # tail[q] = sum_{k>q} lam_k / d^2
    q = np.arange(d)
    pen = tau * q * float(n) ** g_exponent
    if variant == "ic1":
        return tail + pen
    if variant == "ic2":
        if c_star is None:
            c_star = default_c_star(lam, d)
        return np.log(c_star + tail) + pen
    raise ValueError(f"unknown information criterion {variant!r}")


def default_c_star(lambdas, d: int) -> float:
    lam1 = float(np.asarray(lambdas, dtype=float)[0])
    return 1e-3 * lam1 / d**2 if lam1 > 0 else 1e-300


def select_dim_ic(lambdas, n: int, cfg: DimSelectConfig, tau: float,
                  variant: str | None = None) -> int:
    """argmin over 0 <= q < d of the chosen information criterion."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    variant = variant or ("ic1" if cfg.method == "ic1" else "ic2")
    d = cfg.d if cfg.d is not None else min(20, len(lambdas))
    vals = ic_values(lambdas, n, d, tau, variant, cfg.c_star, cfg.g_exponent)
    return int(np.argmin(vals))


@dataclass
class MajorityVote:
    r_hat: int
    tau_lo: float
    tau_hi: float
    taus: np.ndarray = field(repr=False)
    qs: np.ndarray = field(repr=False)
    votes: dict = field(default_factory=dict)
    fallback: bool = False


def _bisect_tau(h, target, lo, hi, side, iters=200):
    # h is non-increasing in tau; search in log space
    a, b = np.log(lo), np.log(hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if side(h(np.exp(m)), target):
            a = m
        else:
            b = m
        if b - a < 1e-12:
            break
    return np.exp(a), np.exp(b)


def select_dim_majority(lambdas, n: int, cfg: DimSelectConfig,
                        variant: str = "ic2") -> MajorityVote:
    """Majority vote of the IC minimizer over a grid of penalty constants.

    The grid spans ``[tau_lo, tau_hi]``: below ``tau_lo`` the minimizer stays
    at its largest value, above ``tau_hi`` it is 0. The winner is the q
    returned most often over ``tau_grid_size`` equispaced values (ties go to
    the smaller q). Falls back to the ratio estimator if the spectrum is
    degenerate.
    """
    lam = np.clip(np.asarray(lambdas, dtype=float), 0.0, None)
    d = cfg.d if cfg.d is not None else min(20, lam.size)
    if lam.size == 0 or lam[0] <= 0:
        raise AllZeroSpectrum("largest eigenvalue is not positive")
    c_star = cfg.c_star if cfg.c_star is not None else default_c_star(lam, d)

    def h(tau):
        return int(np.argmin(ic_values(lam, n, d, tau, variant, c_star, cfg.g_exponent)))

    g = float(n) ** cfg.g_exponent
    # bracket: tiny tau gives the largest minimizer, huge tau gives 0
    scale = (abs(ic_values(lam, n, d, 1.0, variant, c_star, cfg.g_exponent)[0]) + 1.0) / g
    tiny, huge = 1e-14 * scale, 1e14 * scale
    q_top = h(tiny)
    if q_top == 0 or h(huge) != 0:
        r = select_dim_ratio(lam, min(d, lam.size - 1) if lam.size > 1 else 1)
        return MajorityVote(r, np.nan, np.nan, np.array([]), np.array([]),
                            {r: 0}, fallback=True)
    tau_lo, _ = _bisect_tau(h, q_top, tiny, huge, lambda q, t: q == t)
    _, tau_hi = _bisect_tau(h, 0, tiny, huge, lambda q, t: q != t)
    taus = np.linspace(tau_lo, tau_hi, cfg.tau_grid_size)
    qs = np.array([h(t) for t in taus])
    values, counts = np.unique(qs, return_counts=True)
    winner = int(values[np.argmax(counts)])  # np.unique sorts, argmax takes first
    return MajorityVote(winner, float(tau_lo), float(tau_hi), taus, qs,
                        dict(zip(values.tolist(), counts.tolist())))


def select_dimension(lambdas, n: int, cfg: DimSelectConfig,
                     d: int | None = None) -> tuple[int, dict]:
    """Dispatch on ``cfg.method``; returns ``(r_hat, diagnostics)``.

    IC-type selections of 0 are lifted to 1 since a fitted model always
    carries at least one response direction.
    """
    lam = np.asarray(lambdas, dtype=float)
    if d is None:
        d = cfg.d if cfg.d is not None else min(20, lam.size)
    diag: dict = {"method": cfg.method, "d": d}
    if cfg.method == "fixed":
        r = min(cfg.fixed_r, lam.size)
    elif d < 2:
        # nothing to scan: the IC criteria are undefined, use the ratio rule
        r, diag["fallback"] = select_dim_ratio(lam, 1), True
    elif cfg.method == "ratio":
        r = select_dim_ratio(lam, min(d, max(lam.size - 1, 1)))
    elif cfg.method in ("ic1", "ic2"):
        # single tau: the midpoint (in log scale) of the voting bracket
        sub = DimSelectConfig(method=cfg.method, d=d, c_star=cfg.c_star,
                              tau_grid_size=cfg.tau_grid_size, g_exponent=cfg.g_exponent)
        vote = select_dim_majority(lam, n, sub, variant=cfg.method)
        if vote.fallback:
            r, diag["fallback"] = vote.r_hat, True
        else:
            tau = float(np.sqrt(vote.tau_lo * vote.tau_hi))
            diag["tau"] = tau
            r = select_dim_ic(lam, n, sub, tau, variant=cfg.method)
    else:
        sub = DimSelectConfig(method=cfg.method, d=d, c_star=cfg.c_star,
                              tau_grid_size=cfg.tau_grid_size, g_exponent=cfg.g_exponent)
        vote = select_dim_majority(lam, n, sub)
        r = vote.r_hat
        diag.update(tau_lo=vote.tau_lo, tau_hi=vote.tau_hi, votes=vote.votes,
                    fallback=vote.fallback)
    if r < 1:
        diag["lifted_from_zero"] = True
        r = 1
    return int(r), diag


# -- regression ------------------------------------------------------------------

@dataclass(frozen=True)
class CurveRegressionModel:
    cross_cov: CrossCovModel
    r_hat: int
    K: int
    betas: np.ndarray  # (r_hat, K)
    residual_variances: np.ndarray  # (r_hat,)
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.cross_cov.n

    def coefficient_surface(self) -> np.ndarray:
        """beta(u, v) on the two grids, from the fitted scalar coefficients."""
        cc = self.cross_cov
        return cc.phis[: self.r_hat].T @ self.betas @ cc.psis[: self.K]

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        eta = self.cross_cov.regressor_scores(np.atleast_2d(X), self.K)
        return eta @ self.betas.T

    def predict_values(self, X: np.ndarray) -> np.ndarray:
        """Predicted response values for each row of ``X``."""
        X = np.asarray(X, dtype=float)
        xi = self.predict_scores(X)
        out = self.cross_cov.mean_y + xi @ self.cross_cov.phis[: self.r_hat]
        return out[0] if X.ndim == 1 else out


def fit_curve_regression(sample: CurveSample, cfg: DimSelectConfig | None = None,
                         K: int = 10) -> CurveRegressionModel:
    """Select the correlation dimension and fit the scalar regressions.

    Each response score xi_j (j <= r_hat) is regressed without intercept on
    the first ``K`` regressor scores by least squares; a rank-deficient
    design falls back to the minimum-norm solution and is flagged.
    """
    cfg = cfg or DimSelectConfig()
    n = sample.n
    m1, m2 = len(sample.grid_y), len(sample.grid_x)
    if n <= K:
        raise ValueError(f"need n > K for least squares (n={n}, K={K})")
    cc = estimate_cross_cov(sample, min(m1, m2, n))
    d = cfg.resolve_d(n, m1, m2)
    if K > cc.d:
        raise DimensionTooLarge(f"K={K} exceeds the {cc.d} available components")
    r_hat, diag = select_dimension(cc.lambdas, n, cfg, d)
    r_hat = min(r_hat, cc.d)
    xi = cc.response_scores(sample.Y, r_hat)
    eta = cc.regressor_scores(sample.X, K)
    betas, _, rank, _ = np.linalg.lstsq(eta, xi, rcond=None)
    if rank < K:
        diag["rank_deficient"] = True
        log.warning("regressor score matrix has rank %d < K=%d", rank, K)
    resid = xi - eta @ betas
    dof = max(n - rank, 1)
    resvar = (resid**2).sum(axis=0) / dof
    return CurveRegressionModel(cc, int(r_hat), K, betas.T.copy(), resvar, diag)


def predict_response_curve(model: CurveRegressionModel, x: Curve) -> Curve:
    if x.grid != model.cross_cov.grid_x:
        raise GridMismatch("regressor curve is not on the model's regressor grid")
    return Curve(model.cross_cov.grid_y, model.predict_values(x.values))


def oracle_scores(y_true: Curve, model: CurveRegressionModel) -> np.ndarray:
    """Projections of the true centered response on the first r_hat directions."""
    if y_true.grid != model.cross_cov.grid_y:
        raise GridMismatch("response curve is not on the model's response grid")
    return model.cross_cov.response_scores(y_true.values, model.r_hat)


def oracle_values(model: CurveRegressionModel, y_true: np.ndarray) -> np.ndarray:
    cc = model.cross_cov
    xi = cc.response_scores(y_true, model.r_hat)
    return cc.mean_y + xi @ cc.phis[: model.r_hat]
