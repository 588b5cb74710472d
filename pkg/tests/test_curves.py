import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hybridload.curves import (Curve, CurveSample, DegenerateScale, EmptyInput, Grid,
                               GridMismatch, SegmentStats, day_grid, inner_product,
                               join_grids, mean_curve, standardize_and_join,
                               standardize_and_join_arrays, trapezoid_weights)


def test_trapezoid_weights_interior_and_ends():
    p = np.array([0.0, 0.1, 0.3, 0.6, 1.0])
    w = trapezoid_weights(p)
    assert w[0] == pytest.approx(0.05)
    assert w[-1] == pytest.approx(0.2)
    for i in range(1, 4):
        assert w[i] == pytest.approx((p[i + 1] - p[i - 1]) / 2)


@pytest.mark.parametrize("points", [[0.0], [0.0, 0.0, 1.0], [1.0, 0.5]])
def test_grid_rejects_bad_points(points):
    with pytest.raises(ValueError):
        Grid.trapezoid(points)


def test_constant_one_integrates_to_interval_length():
    g = Grid.uniform(0, 1, 48)
    one = Curve(g, np.ones(48))
    assert inner_product(one, one) == pytest.approx(1.0, abs=1e-12)


def test_zero_curve_inner_product():
    g = Grid.uniform(0, 1, 48)
    rng = np.random.default_rng(0)
    assert inner_product(Curve(g, np.zeros(48)), Curve(g, rng.normal(size=48))) == 0.0


def test_u_squared_integral():
    g = Grid.uniform(0, 1, 401)
    u = Curve(g, g.points)
    assert abs(inner_product(u, u) - 1 / 3) < 1e-4


@pytest.mark.parametrize("n", [11, 101, 1001])
def test_trapezoid_exact_for_linear_integrands(n):
    # f*g linear -> trapezoid is exact on any grid
    g = Grid.trapezoid(np.sort(np.random.default_rng(n).uniform(-2, 3, n)))
    f = Curve(g, 2 * g.points - 1)
    one = Curve(g, np.ones(n))
    a, b = g.points[0], g.points[-1]
    exact = (b**2 - b) - (a**2 - a)
    assert inner_product(f, one) == pytest.approx(exact, rel=1e-12)


def test_quadratic_error_shrinks_with_refinement():
    errs = []
    for n in (11, 21, 41, 81):
        g = Grid.uniform(0, 2, n)
        u = Curve(g, g.points)
        errs.append(abs(inner_product(u, u) - 8 / 3))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.5)  # second order


def test_grid_mismatch():
    a = Curve(Grid.uniform(0, 1, 5), np.ones(5))
    b = Curve(Grid.uniform(0, 2, 5), np.ones(5))
    with pytest.raises(GridMismatch):
        inner_product(a, b)
    with pytest.raises(GridMismatch):
        a + b


def test_curve_requires_finite_values():
    with pytest.raises(ValueError):
        Curve(Grid.uniform(0, 1, 3), np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ValueError):
        Curve(Grid.uniform(0, 1, 3), np.ones(4))


def test_mean_curve_examples():
    g = Grid.uniform(0, 1, 2)
    c = Curve(g, np.array([1.0, 3.0]))
    assert np.array_equal(mean_curve([c, c]).values, c.values)
    assert np.allclose(mean_curve([c, -c]).values, 0.0)
    assert np.allclose(mean_curve([c, Curve(g, np.array([3.0, 5.0]))]).values, [2, 4])
    with pytest.raises(EmptyInput):
        mean_curve([])


def test_day_grid():
    g = day_grid()
    assert len(g) == 48
    assert g.points[0] == pytest.approx(1 / 48) and g.points[-1] == 1.0


def test_join_keeps_segment_weights():
    a, b = day_grid(24), Grid.uniform(0, 10, 5)
    j = join_grids(a, b)
    assert len(j) == 29
    assert np.all(np.diff(j.points) > 0)
    assert np.array_equal(j.weights[:24], a.weights)
    assert np.array_equal(j.weights[24:], b.weights)
    assert j.segments == ((0, 24), (24, 29))


def _stats_example():
    rng = np.random.default_rng(3)
    loads = rng.uniform(-10000, 10000, (30, 48))
    temps = rng.uniform(0, 20, (30, 48))
    return loads, temps, SegmentStats.fit(loads, temps)


def test_standardize_constant_load_at_mean_gives_zeros():
    _, _, st_ = _stats_example()
    g = day_grid()
    out = standardize_and_join(Curve(g, np.full(48, st_.load_mean)),
                               Curve(g, np.full(48, st_.temp_mean + st_.temp_sd)), st_)
    assert np.allclose(out.values[:48], 0.0)
    assert np.allclose(out.values[48:], 1.0)
    assert len(out.grid) == 96


def test_standardized_training_set_has_unit_pooled_moments():
    loads, temps, st_ = _stats_example()
    z = standardize_and_join_arrays(loads, temps, st_)
    for seg in (z[:, :48], z[:, 48:]):
        assert abs(seg.mean()) < 1e-10
        assert abs(seg.std() - 1) < 1e-12


def test_degenerate_scale():
    with pytest.raises(DegenerateScale):
        SegmentStats.fit(np.full((5, 4), 3.0), np.random.default_rng(0).normal(size=(5, 4)))
    with pytest.raises(DegenerateScale):
        SegmentStats.fit(np.random.default_rng(0).normal(size=(5, 4)), np.zeros((5, 4)))


def test_curve_sample_validation():
    g = day_grid(4)
    with pytest.raises(ValueError):
        CurveSample(g, g, np.ones((1, 4)), np.ones((1, 4)))
    with pytest.raises(ValueError):
        CurveSample(g, g, np.ones((3, 4)), np.ones((2, 4)))
    s = CurveSample.from_curves([Curve(g, np.ones(4))] * 3, [Curve(g, np.zeros(4))] * 3)
    assert s.n == 3 and len(s.responses()) == 3


_vec = arrays(np.float64, 12, elements=st.floats(-1e3, 1e3))


@settings(max_examples=200, deadline=None)
@given(_vec, _vec, _vec, st.floats(-10, 10))
def test_inner_product_symmetric_bilinear(a, b, c, s):
    g = Grid.uniform(0, 1, 12)
    f, h, k = Curve(g, a), Curve(g, b), Curve(g, c)
    scale = 1 + np.abs(a).max() * (np.abs(b).max() + np.abs(c).max()) * (1 + abs(s))
    assert inner_product(f, h) == pytest.approx(inner_product(h, f), abs=1e-12 * scale)
    lhs = inner_product(f * s + k, h)
    rhs = s * inner_product(f, h) + inner_product(k, h)
    assert abs(lhs - rhs) <= 1e-11 * scale
    assert inner_product(f, f) >= 0
