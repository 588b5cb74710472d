"""
Curves on quadrature grids
==========================

Daily load curves live on a grid of 48 half-hour slots. Integrals are
computed with trapezoid weights, so the inner product of two curves is a
weighted dot product.
"""
import numpy as np

from hybridload import Curve, Grid, day_grid, inner_product, join_grids

# the half-hourly day grid, rescaled to [0, 1]
g = day_grid()
print("points:", len(g.points), "total weight:", g.weights.sum())

# <sin, cos> over a full period is zero; <sin, sin> is 1/2
u = g.points
s = Curve(g, np.sin(2 * np.pi * u))
c = Curve(g, np.cos(2 * np.pi * u))
print("<sin, cos> = %.2e" % inner_product(s, c))
print("<sin, sin> = %.4f" % inner_product(s, s))

# an irregular grid works the same way
irregular = Grid.trapezoid([0.0, 0.1, 0.5, 1.0])
print("irregular weights:", irregular.weights)

# joining two grids lets a load curve and a temperature curve form a
# single regressor on [0, 2]
joined = join_grids(g, g)
print("joined grid:", len(joined.points), "points, segments", joined.segments)
