"""
Transport costs between point clouds
====================================

Exact costs between small clouds, the Gaussian closed form and the
Bures-Wasserstein distance.  Costs use the halved quadratic ``|x - y|^2 / 2``.
"""

# %%
import numpy as np

from mfchaos.ot_core import (PointCloud, WeightedCloud, bruteforce_ot, bures_wasserstein,
                             exact_w2_assignment, gaussian_w2, w2_cost, w2_metric)

rng = np.random.default_rng(0)

# %% equal-size clouds: linear assignment against the simplex oracle
x, y = rng.normal(size=(6, 2)), rng.normal(size=(6, 2)) + 1.0
cost, plan = exact_w2_assignment(PointCloud(x), PointCloud(y))
print("assignment cost", cost, "permutation", plan.perm)
print("simplex cost   ", bruteforce_ot(PointCloud(x), PointCloud(y))[0])
print("W2 metric      ", w2_metric(cost))

# %% unequal weights on the line
mu = WeightedCloud([[0.0], [1.0], [3.0]], [0.5, 0.25, 0.25])
nu = WeightedCloud([[0.5], [2.0]], [0.5, 0.5])
print("weighted 1-D cost and route", w2_cost(mu, nu))

# %% Gaussian closed form against sampled clouds
a = np.array([[2.0, 0.5], [0.5, 1.0]])
b = np.array([[1.0, -0.3], [-0.3, 3.0]])
X = rng.multivariate_normal([0, 0], a, 1500)
Y = rng.multivariate_normal([1, 0], b, 1500)
print("closed form", gaussian_w2([0, 0], a, [1, 0], b))
print("sampled    ", exact_w2_assignment(PointCloud(X), PointCloud(Y))[0])

# %% Bures-Wasserstein hand case
print("W_S(diag(1,4), diag(4,1)) =", bures_wasserstein(np.diag([1.0, 4.0]), np.diag([4.0, 1.0])))
