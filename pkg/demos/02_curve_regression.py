"""
Curve-on-curve regression through the cross-covariance SVD
===========================================================

Synthetic pairs (X, Y) share three latent factors. The weighted SVD of the
sample cross-covariance gives paired bases; the first r response scores are
regressed on the first K regressor scores.
"""
import numpy as np

from hybridload import (DimSelectConfig, Curve, estimate_cross_cov, fit_curve_regression,
                        generate_curve_pairs, predict_response_curve)
from hybridload.svdreg import oracle_values

sample, lam_true = generate_curve_pairs(400, true_r=3, seed=0)
print("population lambdas:", np.round(lam_true[:5], 1))

cc = estimate_cross_cov(sample, d=8)
print("sample lambdas:    ", np.round(cc.lambdas[:5], 1))
# beyond the true rank the eigenvalues are of order 1/n

model = fit_curve_regression(sample, DimSelectConfig(), K=10)
print("selected dimension:", model.r_hat)

# predict a held-out pair and compare with the oracle, which projects the
# true response on the fitted directions
test, _ = generate_curve_pairs(50, true_r=3, seed=1)
err_pred, err_oracle = [], []
for x, y in zip(test.X, test.Y):
    pred = predict_response_curve(model, Curve(test.grid_x, x)).values
    orc = oracle_values(model, y)
    err_pred.append(np.sqrt(np.mean((pred - y) ** 2)))
    err_oracle.append(np.sqrt(np.mean((orc - y) ** 2)))
print("RMSE regression %.1f, oracle %.1f" % (np.mean(err_pred), np.mean(err_oracle)))
