"""Sampled curves on quadrature grids.

A curve is stored as its values on a fixed grid; integrals over the index
set are replaced by a weighted sum with trapezoidal weights, so the L2 inner
product of two curves is ``sum(w * f * g)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GridMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class DegenerateScale(ValueError):
    pass


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    h = np.diff(points)
    w = np.zeros_like(points, dtype=float)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered abscissae with positive quadrature weights.

    ``segments`` records the index ranges of the pieces a joined grid was
    assembled from; a plain grid has a single segment.
    """

    points: np.ndarray
    weights: np.ndarray
    segments: tuple = field(default=())

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("a grid needs at least two points")
        if not np.all(np.diff(p) > 0):
            raise ValueError("grid points must be strictly increasing")
        if w.shape != p.shape or not np.all(w > 0):
            raise ValueError("weights must be positive and match the points")
        p.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)
        if not self.segments:
            object.__setattr__(self, "segments", ((0, p.size),))

    @classmethod
    def trapezoid(cls, points) -> "Grid":
        p = np.asarray(points, dtype=float)
        return cls(p, trapezoid_weights(p))

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Grid":
        return cls.trapezoid(np.linspace(a, b, n))

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.weights.tobytes()))

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    def segment(self, k: int) -> slice:
        lo, hi = self.segments[k]
        return slice(lo, hi)


def day_grid(n_slots: int = 48) -> Grid:
    """Half-hourly grid of one day, as fractions of the day (1/48, ..., 1)."""
    return Grid.trapezoid(np.arange(1, n_slots + 1) / n_slots)


def join_grids(first: Grid, second: Grid) -> Grid:
    """Concatenate two grids, each keeping its own quadrature weights.

    The second grid's abscissae are shifted to follow the first so the joined
    points stay increasing; the shift has no effect on any integral.
    """
    gap = first.points[-1] - first.points[-2]
    shift = first.points[-1] + gap - second.points[0]
    points = np.concatenate([first.points, second.points + shift])
    weights = np.concatenate([first.weights, second.weights])
    n1 = len(first)
    segs = tuple(first.segments) + tuple(
        (lo + n1, hi + n1) for lo, hi in second.segments
    )
    return Grid(points, weights, segs)


@dataclass(frozen=True, eq=False)
class Curve:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError(
                f"curve has {v.size} values for a grid of {len(self.grid)} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _check(self, other: "Curve"):
        if self.grid != other.grid:
            raise GridMismatch("curves live on different grids")

    def __add__(self, other):
        if isinstance(other, Curve):
            self._check(other)
            return Curve(self.grid, self.values + other.values)
        return Curve(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Curve):
            self._check(other)
            return Curve(self.grid, self.values - other.values)
        return Curve(self.grid, self.values - other)

    def __mul__(self, c):
        return Curve(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Curve(self.grid, -self.values)

    def norm(self) -> float:
        return float(np.sqrt(max(inner_product(self, self), 0.0)))


def inner_product(f: Curve, g: Curve) -> float:
    """Quadrature approximation of the L2 inner product of two curves."""
    f._check(g)
    return float(np.sum(f.grid.weights * f.values * g.values))


def mean_curve(curves: Sequence[Curve]) -> Curve:
    if len(curves) == 0:
        raise EmptyInput("mean of an empty set of curves")
    grid = curves[0].grid
    for c in curves[1:]:
        if c.grid != grid:
            raise GridMismatch("curves live on different grids")
    return Curve(grid, np.mean([c.values for c in curves], axis=0))


@dataclass(frozen=True)
class CurveSample:
    """Paired sample of response and regressor curves stored as arrays.

    ``Y`` is ``(n, len(grid_y))`` and ``X`` is ``(n, len(grid_x))``.
    """

    grid_y: Grid
    grid_x: Grid
    Y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0]:
            raise ValueError("responses and regressors must pair up row by row")
        if Y.shape[0] < 2:
            raise ValueError("a curve sample needs at least two pairs")
        if Y.shape[1] != len(self.grid_y) or X.shape[1] != len(self.grid_x):
            raise GridMismatch("sample arrays do not match their grids")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
            raise ValueError("sample contains non-finite values")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)

    @classmethod
    def from_curves(cls, responses: Sequence[Curve], regressors: Sequence[Curve]):
        if len(responses) != len(regressors):
            raise ValueError("responses and regressors differ in length")
        if not responses:
            raise EmptyInput("empty curve sample")
        gy, gx = responses[0].grid, regressors[0].grid
        if any(c.grid != gy for c in responses) or any(c.grid != gx for c in regressors):
            raise GridMismatch("all responses (regressors) must share one grid")
        return cls(gy, gx, np.array([c.values for c in responses]),
                   np.array([c.values for c in regressors]))

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def responses(self) -> list[Curve]:
        return [Curve(self.grid_y, row) for row in self.Y]

    def regressors(self) -> list[Curve]:
        return [Curve(self.grid_x, row) for row in self.X]


@dataclass(frozen=True)
class SegmentStats:
    """Pooled location and scale for the load and temperature segments."""

    load_mean: float
    load_sd: float
    temp_mean: float
    temp_sd: float

    @classmethod
    def fit(cls, loads, temps) -> "SegmentStats":
        """Pooled moments over all training curves and grid points.

        ``loads`` and ``temps`` are 2-d arrays (one curve per row) or lists
        of curves.
        """
        L = _as_matrix(loads)
        T = _as_matrix(temps)
        stats = cls(float(L.mean()), float(L.std()), float(T.mean()), float(T.std()))
        scale = max(abs(stats.load_mean), 1.0)
        if stats.load_sd <= 1e-12 * scale:
            raise DegenerateScale("load segment has zero training variance")
        if stats.temp_sd <= 1e-12 * max(abs(stats.temp_mean), 1.0):
            raise DegenerateScale("temperature segment has zero training variance")
        return stats

    def to_dict(self) -> dict:
        return dict(load_mean=self.load_mean, load_sd=self.load_sd,
                    temp_mean=self.temp_mean, temp_sd=self.temp_sd)


def _as_matrix(curves) -> np.ndarray:
    if isinstance(curves, np.ndarray):
        return np.atleast_2d(curves).astype(float)
    return np.array([c.values if isinstance(c, Curve) else c for c in curves], dtype=float)


def standardize_and_join_arrays(load: np.ndarray, temp: np.ndarray,
                                stats: SegmentStats) -> np.ndarray:
    """Row-wise standardize-and-join for 2-d arrays of segment values."""
    if stats.load_sd <= 0 or stats.temp_sd <= 0:
        raise DegenerateScale("segment scale must be positive")
    zl = (np.asarray(load, dtype=float) - stats.load_mean) / stats.load_sd
    zt = (np.asarray(temp, dtype=float) - stats.temp_mean) / stats.temp_sd
    return np.concatenate([zl, zt], axis=-1)


def standardize_and_join(load: Curve, temp: Curve, stats: SegmentStats,
                         grid: Grid | None = None) -> Curve:
    """Standardize each segment with training statistics and concatenate.

    The result lives on ``join_grids(load.grid, temp.grid)`` unless a
    prebuilt joined ``grid`` is passed (it must match that layout).
    """
    joined = grid if grid is not None else join_grids(load.grid, temp.grid)
    if len(joined) != len(load.grid) + len(temp.grid):
        raise GridMismatch("joined grid does not match the two segments")
    values = standardize_and_join_arrays(load.values, temp.values, stats)
    return Curve(joined, values)
