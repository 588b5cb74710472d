"""Hybrid electricity-load forecasting.

A penalized-spline additive model carries the weekly trend; daily residual
curves are predicted by curve-on-curve regression reduced, through the SVD
of the cross-covariance operator, to a handful of scalar regressions.
"""
from .calendar import DayClass, classify_day, day_type, segment
from .curves import Curve, CurveSample, Grid, SegmentStats, day_grid, inner_product, join_grids
from .datagen import ScenarioConfig, generate, generate_curve_pairs
from .gam import GamModel, SmoothTerm, WeeklyRecord, compare_models, fit_gam, trend_terms
from .metrics import EvalReport, evaluate, mape, rmse
from .pipeline import (FitConfig, ForecastResult, HalfHourlySeries, HybridForecaster,
                       RegressorSpec, WeatherSeries, audit_windows)
from .svdreg import (CrossCovModel, CurveRegressionModel, DimSelectConfig, estimate_cross_cov,
                     fit_curve_regression, predict_response_curve, select_dim_ic,
                     select_dim_majority, select_dim_ratio, select_dimension)

__version__ = "0.1.0"

__all__ = [
    "Curve", "CurveSample", "CrossCovModel", "CurveRegressionModel", "DayClass",
    "DimSelectConfig", "EvalReport", "FitConfig", "ForecastResult", "GamModel", "Grid",
    "HalfHourlySeries", "HybridForecaster", "RegressorSpec", "ScenarioConfig", "SegmentStats",
    "SmoothTerm", "WeatherSeries", "WeeklyRecord", "audit_windows", "classify_day",
    "compare_models", "day_grid", "day_type", "estimate_cross_cov", "evaluate", "fit_curve_regression",
    "fit_gam", "generate", "generate_curve_pairs", "inner_product", "join_grids", "mape",
    "predict_response_curve", "rmse", "segment", "select_dim_ic", "select_dim_majority",
    "select_dim_ratio", "select_dimension", "trend_terms",
]
