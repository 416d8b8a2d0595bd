"""
Interacting particles and their mean-field partners
===================================================

Simulate N particles attracted to the mean of the others and couple them
synchronously with independent particles driven by the mean-field law.
"""

# %%
import numpy as np

from mfchaos.io import initial_cloud
from mfchaos.levy_model import (LipschitzParams, MeanFieldModel, constant_eta,
                                constant_sigma, linear_attraction)
from mfchaos.mf_solver import SolverConfig, solve_mean_field
from mfchaos.ot_core import DiscreteLevyMeasure
from mfchaos.simulator import SimConfig, simulate, simulate_synchronous_pair

base = DiscreteLevyMeasure([[0.5], [-1.0]], [1.0, 0.5])
model = MeanFieldModel.average_form(
    1, linear_attraction(1, 1.0), constant_sigma(1, 0.5), constant_eta(1, 1.0), base,
    lipschitz=LipschitzParams(alpha=0.5, beta=0.0, M=2.0, M_prime=0.0))

# %% the interacting system
cfg = SimConfig(N=64, d=1, T=1.0, dt=1 / 1024, seed=3, checkpoints=(0.0, 0.5, 1.0))
for t, state in simulate(cfg, model, initial_cloud(None, 64, 1, seed=3)):
    print(f"t={t:.2f} mean={state.positions.mean():+.4f} var={state.positions.var():.4f}")

# %% mean-field curve, then the synchronous coupling
rho0 = initial_cloud(None, 2000, 1, seed=3)
curve, iters = solve_mean_field(model, rho0, 1.0, SolverConfig(M=2000, h=1 / 32, dt=1 / 1024))
print("Picard updates per window:", iters)
for t, state, cost in simulate_synchronous_pair(cfg, model, curve, job=1):
    print(f"t={t:.2f} tensorized cost {cost:.2e}")
