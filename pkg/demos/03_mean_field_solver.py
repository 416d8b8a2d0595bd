"""
Mean-field solver: Picard iteration and mesh refinement
=======================================================

The mean-field Ornstein-Uhlenbeck model relaxes towards its conserved mean;
its variance has a closed form.  The second part refines the partition of
the piecewise constant scheme for a time-dependent drift.
"""

# %%
import numpy as np

from mfchaos.curve import MeasureCurve
from mfchaos.io import initial_cloud
from mfchaos.levy_model import (LipschitzParams, MeanFieldModel, constant_sigma,
                                linear_attraction)
from mfchaos.mf_solver import SolverConfig, pca_refinement_study, solve_mean_field

s, T = 0.8, 1.0
model = MeanFieldModel.average_form(1, linear_attraction(1, 1.0), constant_sigma(1, s),
                                    lipschitz=LipschitzParams(alpha=0.5, beta=0.0))
rho0 = initial_cloud({"distribution": "normal", "mean": 0.5}, 10_000, 1, seed=5)
sol = solve_mean_field(model, rho0, T, SolverConfig(M=10_000, h=0.025, dt=1e-3))
v0 = rho0.points.var()
print("Picard residuals:", ["%.1e" % r for r in sol.residuals[0]])
print("variance", sol.curve.points[-1].var(), "closed form",
      v0 * np.exp(-2 * T) + s * s / 2 * (1 - np.exp(-2 * T)))

# %% mesh refinement for b_t(x) = -(1 + t) x, written as a measure-dependent drift
drift = MeanFieldModel.general(1, b=lambda x, p: -(1.0 + p.mean(axis=0)) * x,
                               sigma=lambda x, p: np.full(x.shape + (1,), 0.5))
grid = np.arange(1025) / 1024
mu = MeasureCurve(grid, grid[:, None, None].copy())
study = pca_refinement_study(drift, mu, initial_cloud(None, 2000, 1, seed=6),
                             [1 / 4, 1 / 8, 1 / 16, 1 / 32],
                             SolverConfig(M=2000, h=1 / 4, dt=1 / 1024))
for h, c in study.table():
    print(f"mesh {h:.4f}  sup cost to finest {c:.3e}")
print("successive ratios", ["%.3f" % r for r in study.ratios])
