"""
Choosing the correlation dimension
==================================

The ratio estimator picks the largest drop between consecutive
eigenvalues. The information criterion penalises the tail sum; majority
voting over a grid of penalty constants removes the need to pick one.
"""
from hybridload import (DimSelectConfig, estimate_cross_cov, generate_curve_pairs,
                        select_dim_majority, select_dimension)

for r in (1, 3, 5):
    hits = {"ratio": 0, "ic_majority": 0}
    for seed in range(20):
        sample, _ = generate_curve_pairs(500, true_r=r, seed=seed)
        lam = estimate_cross_cov(sample, d=12).lambdas
        hits["ratio"] += select_dimension(lam, 500, DimSelectConfig("ratio", d=12))[0] == r
        vote = select_dim_majority(lam, 500, DimSelectConfig(d=12))
        hits["ic_majority"] += vote.r_hat == r
    print(f"true r={r}: ratio {hits['ratio']}/20, majority vote {hits['ic_majority']}/20")

# the vote records how many penalty constants chose each dimension
sample, _ = generate_curve_pairs(500, true_r=3, seed=99)
vote = select_dim_majority(estimate_cross_cov(sample, d=12).lambdas, 500, DimSelectConfig(d=12))
print("votes:", vote.votes, "tau range %.3g .. %.3g" % (vote.tau_lo, vote.tau_hi))
