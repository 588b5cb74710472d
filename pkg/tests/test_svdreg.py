import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridload.curves import Curve, CurveSample, Grid, GridMismatch, day_grid
from hybridload.datagen import factor_loadings, generate_curve_pairs
from hybridload.svdreg import (AllZeroSpectrum, DimSelectConfig, DimensionTooLarge,
                               cross_cov_matrix, estimate_cross_cov, fit_curve_regression,
                               ic_values, oracle_scores, oracle_values,
                               predict_response_curve, scores, select_dim_ic,
                               select_dim_majority, select_dim_ratio, select_dimension)


def _gram(basis, w):
    return (basis * w) @ basis.T


@pytest.fixture(scope="module")
def pairs():
    sample, lam = generate_curve_pairs(300, true_r=3, seed=11)
    return sample, estimate_cross_cov(sample, 12)


# -- estimate_cross_cov -----------------------------------------------------------

def test_rank_one_sample_recovers_s4_and_directions():
    g = day_grid()
    L = factor_loadings(2, g)
    u, v = L[0], L[1]
    a = np.random.default_rng(0).normal(0, 3, 40)
    s2 = a.var()
    sample = CurveSample(g, g, np.outer(a, u), np.outer(a, v))
    cc = estimate_cross_cov(sample, 5)
    assert cc.lambdas[0] == pytest.approx(s2**2, rel=1e-10)
    assert np.all(cc.lambdas[1:] < 1e-20 * cc.lambdas[0])
    assert abs(abs(np.sum(g.weights * cc.phis[0] * u)) - 1) < 1e-10
    assert abs(abs(np.sum(g.weights * cc.psis[0] * v)) - 1) < 1e-10


def test_two_point_hand_matrix():
    g = Grid(np.array([0.0, 1.0]), np.ones(2))
    # Y = (a, 0), X = (a, 0) with var(a) = 1 gives S = [[1, 0], [0, 0]]
    a = np.array([1.0, -1.0])
    Y = np.c_[a, np.zeros(2)]
    sample = CurveSample(g, g, Y, Y.copy())
    assert np.allclose(cross_cov_matrix(sample), [[1, 0], [0, 0]])
    cc = estimate_cross_cov(sample, 2)
    assert np.allclose(cc.lambdas, [1, 0])
    assert np.allclose(cc.phis[0], [1, 0]) and np.allclose(cc.psis[0], [1, 0])


def test_dimension_too_large(pairs):
    sample, _ = pairs
    with pytest.raises(DimensionTooLarge):
        estimate_cross_cov(sample, 49)


def test_orthonormal_bases_and_sorted_lambdas(pairs):
    _, cc = pairs
    assert np.allclose(_gram(cc.phis, cc.grid_y.weights), np.eye(cc.d), atol=1e-8)
    assert np.allclose(_gram(cc.psis, cc.grid_x.weights), np.eye(cc.d), atol=1e-8)
    assert np.all(np.diff(cc.lambdas) <= 0) and np.all(cc.lambdas >= 0)


def test_svd_consistency_double_contraction(pairs):
    sample, cc = pairs
    S = cross_cov_matrix(sample)
    M = (cc.phis * cc.grid_y.weights) @ S @ (cc.psis * cc.grid_x.weights).T
    scale = np.sqrt(cc.lambdas[0])
    assert np.allclose(M, np.diag(np.sqrt(cc.lambdas)), atol=1e-8 * scale)
    # same statement through the sample scores
    xi = cc.response_scores(sample.Y)
    eta = cc.regressor_scores(sample.X)
    C = xi.T @ eta / sample.n
    assert np.allclose(C, np.diag(np.sqrt(cc.lambdas)), atol=1e-8 * scale)


def test_sign_convention(pairs):
    _, cc = pairs
    idx = np.argmax(np.abs(cc.phis), axis=1)
    assert np.all(cc.phis[np.arange(cc.d), idx] > 0)


def test_independent_curves_spectrum_decays_like_one_over_n():
    g = day_grid(12)
    med = []
    for n in (200, 800, 3200):
        vals = []
        for s in range(10):
            rng = np.random.default_rng(1000 * n + s)
            smp = CurveSample(g, g, rng.normal(size=(n, 12)), rng.normal(size=(n, 12)))
            vals.append(estimate_cross_cov(smp, 4).lambdas[0])
        med.append(np.median(vals))
    slope = np.polyfit(np.log([200, 800, 3200]), np.log(med), 1)[0]
    assert -1.25 < slope < -0.75


# -- scores -----------------------------------------------------------------------

def test_scores_examples(pairs):
    _, cc = pairs
    mean = Curve(cc.grid_y, cc.mean_y)
    basis = [cc.phi(j) for j in range(4)]
    assert np.allclose(scores(mean, basis, mean), 0.0)
    assert np.allclose(scores(mean + cc.phi(1), basis, mean), [0, 1, 0, 0], atol=1e-8)
    c = mean + cc.phi(0) * 3 - cc.phi(2) * 2
    assert np.allclose(scores(c, basis, mean), [3, 0, -2, 0], atol=1e-8)
    with pytest.raises(GridMismatch):
        scores(Curve(Grid.uniform(0, 1, 48), cc.mean_y), basis, mean)


# -- dimension selection ----------------------------------------------------------

def test_ratio_examples():
    assert select_dim_ratio([4, 2, 1e-9, 1e-10], 3) == 2
    assert select_dim_ratio([1, 1, 1, 1], 3) == 1
    assert select_dim_ratio([9, 3e-12, 1e-13], 2) == 1
    with pytest.raises(AllZeroSpectrum):
        select_dim_ratio([0, 0, 0], 2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=4, max_size=15), st.floats(1e-3, 1e3))
def test_ratio_is_scale_free(raw, c):
    lam = np.sort(np.array(raw))[::-1]
    d = lam.size - 1
    assert select_dim_ratio(lam, d) == select_dim_ratio(c * lam, d)


def test_ic1_hand_values():
    vals = ic_values([4, 1, 0.01], n=100, d=3, tau=1.0, variant="ic1")
    assert np.allclose(vals, [5.01 / 9, 1.01 / 9 + 0.1, 0.01 / 9 + 0.2], atol=1e-12)
    assert np.round(vals, 4).tolist() == [0.5567, 0.2122, 0.2011]
    cfg = DimSelectConfig(method="ic1", d=3)
    assert select_dim_ic([4, 1, 0.01], 100, cfg, 1.0) == 2


@pytest.mark.parametrize("variant", ["ic1", "ic2"])
def test_ic_tau_limits(variant):
    lam = [4, 1, 0.3, 0.05, 0.01]
    cfg = DimSelectConfig(method=variant, d=5)
    assert select_dim_ic(lam, 100, cfg, 1e12) == 0
    assert select_dim_ic(lam, 100, cfg, 1e-12) == 4


def test_ic2_uses_log_of_tail():
    lam = np.array([4, 1, 0.01])
    c = 0.05
    vals = ic_values(lam, 100, 3, 0.5, "ic2", c_star=c)
    tail = np.array([5.01, 1.01, 0.01]) / 9
    assert np.allclose(vals, np.log(c + tail) + 0.5 * np.arange(3) * 0.1)


def test_majority_single_direction():
    lam = np.r_[1.0, np.full(9, 1e-14)]
    vote = select_dim_majority(lam, 200, DimSelectConfig(d=10))
    assert vote.r_hat == 1


def test_majority_trace_is_monotone_and_consistent():
    sample, _ = generate_curve_pairs(500, true_r=4, seed=5)
    cc = estimate_cross_cov(sample, 12)
    vote = select_dim_majority(cc.lambdas, 500, DimSelectConfig(d=12))
    assert vote.r_hat == 4 and not vote.fallback
    assert vote.taus.size == 100 and vote.tau_lo < vote.tau_hi
    assert np.all(np.diff(vote.qs) <= 0)  # h(tau) is nonincreasing
    assert sum(vote.votes.values()) == 100
    assert vote.votes[4] == max(vote.votes.values())



def test_select_dimension_lifts_zero():
    r, diag = select_dimension([1.0, 0.99, 0.98, 0.97], 50, DimSelectConfig(method="ic1", d=4))
    assert r >= 1


def test_config_invariants():
    with pytest.raises(ValueError):
        DimSelectConfig(d=1)
    with pytest.raises(ValueError):
        DimSelectConfig(c_star=0)
    with pytest.raises(ValueError):
        DimSelectConfig(tau_grid_size=1)
    with pytest.raises(ValueError):
        DimSelectConfig(method="aic")
    assert DimSelectConfig().resolve_d(53, 48, 96) == 20
    assert DimSelectConfig().resolve_d(10, 48, 96) == 9


# -- regression -------------------------------------------------------------------

def _orthogonal_scores(n, sds, seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, len(sds)))
    Z -= Z.mean(0)
    Q, _ = np.linalg.qr(Z)
    return Q * np.sqrt(n) * np.asarray(sds)  # centered, sample-uncorrelated


def test_exact_linear_relation_gives_beta_two():
    g = day_grid(8)
    L = factor_loadings(4, g)
    eta = _orthogonal_scores(60, [3.0, 1.5, 1.0, 0.5], seed=0)
    X = eta @ L
    Y = np.outer(2 * eta[:, 0], L[1])  # xi_1 = 2 eta_1 exactly
    m = fit_curve_regression(CurveSample(g, g, Y, X),
                             DimSelectConfig(method="fixed", fixed_r=1), K=4)
    assert m.betas[0, 0] == pytest.approx(2.0, abs=1e-8)
    assert np.allclose(m.betas[0, 1:], 0.0, atol=1e-8)
    assert np.allclose(m.residual_variances, 0.0, atol=1e-12)


def test_boundary_n15_k10():
    sample, _ = generate_curve_pairs(15, true_r=3, seed=4)
    m = fit_curve_regression(sample, DimSelectConfig(), K=10)
    assert m.betas.shape == (m.r_hat, 10)
    assert np.all(np.isfinite(m.betas))
    with pytest.raises(ValueError):
        fit_curve_regression(generate_curve_pairs(10, seed=4)[0], DimSelectConfig(), K=10)


def test_rank_deficient_regressors_flagged():
    g = day_grid(12)
    rng = np.random.default_rng(0)
    L = factor_loadings(2, g)
    a = rng.normal(size=(30, 2))
    X = a @ L  # only two regressor directions carry variance
    Y = a @ L + 0.01 * rng.normal(size=(30, 12))
    m = fit_curve_regression(CurveSample(g, g, Y, X), DimSelectConfig(method="ratio"), K=5)
    assert m.diagnostics.get("rank_deficient")
    assert np.all(np.isfinite(m.betas))


def test_decoupled_regressions_when_regressor_components_uncorrelated():
    # X has three unit-variance uncorrelated components; Y loads on each one
    # separately, so the population coefficient matrix is diagonal
    g = day_grid()
    L = factor_loadings(3, g)
    b = np.array([3.0, 2.0, 1.0])
    fits = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        eta = rng.normal(size=(200, 3))
        Y = (eta * b + rng.normal(0, 0.3, (200, 3))) @ L
        m = fit_curve_regression(CurveSample(g, g, Y, eta @ L),
                                 DimSelectConfig(method="fixed", fixed_r=3), K=3)
        fits.append(m.betas)
    B = np.array(fits)
    off = ~np.eye(3, dtype=bool)
    mc_mean, mc_se = B.mean(0), B.std(0, ddof=1) / np.sqrt(len(B))
    assert np.all(np.abs(mc_mean[off]) < 3 * mc_se[off])
    assert np.allclose(np.diag(mc_mean), b, rtol=0.05)


def _brute_force_predict(sample, x_new):
    Xc = sample.X - sample.X.mean(0)
    Yc = sample.Y - sample.Y.mean(0)
    # discretized curve regression: Y(u) = mean + sum_v beta(u, v) w_v (X(v) - mean)
    A = Xc * sample.grid_x.weights
    Bt = np.linalg.solve(A.T @ A, A.T @ Yc)
    return sample.Y.mean(0) + ((x_new - sample.X.mean(0)) * sample.grid_x.weights) @ Bt


def test_full_rank_reduction_equals_brute_force_regression():
    g1 = Grid.trapezoid([0.0, 0.2, 0.5, 1.0])
    g2 = Grid.trapezoid([0.0, 0.3, 0.6, 1.0])
    rng = np.random.default_rng(21)
    B = rng.normal(size=(4, 4))
    X = rng.normal(size=(70, 4)) * [3, 2, 1, 0.5]
    Y = 1.0 + X @ B.T
    sample = CurveSample(g1, g2, Y[:50], X[:50])
    m = fit_curve_regression(sample, DimSelectConfig(method="fixed", fixed_r=4), K=4)
    for x, y in zip(X[50:], Y[50:]):
        got = predict_response_curve(m, Curve(g2, x))
        ref = _brute_force_predict(sample, x)
        err = Curve(g1, got.values - ref).norm() / Curve(g1, ref).norm()
        assert err < 1e-6
        assert np.allclose(got.values, y, rtol=1e-8)


def test_predict_examples(pairs):
    sample, _ = pairs
    m = fit_curve_regression(sample, DimSelectConfig(), K=10)
    cc = m.cross_cov
    xbar = Curve(cc.grid_x, cc.mean_x)
    assert np.allclose(predict_response_curve(m, xbar).values, cc.mean_y)
    got = predict_response_curve(m, xbar + cc.psi(0)).values
    want = cc.mean_y + cc.phis[: m.r_hat].T @ m.betas[:, 0]
    assert np.allclose(got, want)
    with pytest.raises(GridMismatch):
        predict_response_curve(m, Curve(Grid.uniform(0, 1, 48), cc.mean_x))


def test_oracle_examples(pairs):
    sample, _ = pairs
    m = fit_curve_regression(sample, DimSelectConfig(), K=10)
    cc = m.cross_cov
    assert np.allclose(oracle_scores(Curve(cc.grid_y, cc.mean_y), m), 0.0)
    x = Curve(cc.grid_x, sample.X[7])
    pred = predict_response_curve(m, x)
    assert np.allclose(oracle_scores(pred, m), m.predict_scores(sample.X[7])[0],
                       atol=1e-10 * np.abs(pred.values).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_oracle_never_worse_than_regression(seed):
    sample, _ = generate_curve_pairs(120, true_r=3, seed=seed)
    m = fit_curve_regression(sample, DimSelectConfig(), K=10)
    w = sample.grid_y.weights
    for i in range(0, sample.n, 17):
        o = oracle_values(m, sample.Y[i])
        p = m.predict_values(sample.X[i])
        eo = np.sum(w * (sample.Y[i] - o) ** 2)
        ep = np.sum(w * (sample.Y[i] - p) ** 2)
        assert eo <= ep + 1e-9 * (1 + ep)


def test_coefficient_surface_reproduces_predictions(pairs):
    sample, _ = pairs
    m = fit_curve_regression(sample, DimSelectConfig(), K=10)
    cc = m.cross_cov
    beta = m.coefficient_surface()
    x = sample.X[3]
    via_surface = cc.mean_y + beta @ (cc.grid_x.weights * (x - cc.mean_x))
    assert np.allclose(via_surface, m.predict_values(x))


def test_majority_degenerate_spectrum_falls_back_to_ratio():
    vote = select_dim_majority([2.5], 50, DimSelectConfig())
    assert vote.fallback and vote.r_hat == 1
    r, diag = select_dimension([2.5], 50, DimSelectConfig())
    assert r == 1 and diag["fallback"]
