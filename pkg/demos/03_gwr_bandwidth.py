"""
GWR fitting and bandwidth selection
===================================

Geographically weighted regression refits the response model at every
plot, weighting neighbours with a Gaussian kernel exp(-d^2 / 2h^2). The
bandwidth h trades locality against stability: small h tracks the
spatially varying truth, large h approaches one global regression. AICc
balances the fit against the effective number of parameters tr(S).
"""

import numpy as np

from striptrial import (
    KernelSpec,
    coefficient_mse,
    gwr_fit,
    select_bandwidth_aicc,
)
from striptrial.config import load_config
from striptrial.simulate import make_trial

# %%
# One quadratic trial on the full grid with AR1 x AR1 spatial structure,
# systematic design.

config = load_config({"replicates": 1})
trial = make_trial(config, config.seed, 1, 1, 0, 1, 0)
print(f"design={trial.labels.design}, response={trial.labels.response}, "
      f"covariance={trial.labels.covariance}")

# %%
# The effective dof tr(S) falls as the bandwidth grows.

for h in (2.0, 5.0, 9.0, 20.0):
    fit = gwr_fit(trial, "quadratic", KernelSpec(bandwidth=h))
    print(f"h={h:5.1f}: tr(S) = {fit.trace_s:8.2f}, tau2 = {fit.tau2:6.3f}, "
          f"AICc = {fit.aicc:9.2f}")

# %%
# AICc selection scans [1, 93] and refines with golden-section search.
# With short-range spatial correlation in the coefficients the optimum
# sits near the lower bound.

h_opt = select_bandwidth_aicc(trial, "quadratic")
print(f"\nAICc-optimal bandwidth: {h_opt:.2f}")

# %%
# Recovery error per coefficient: the selected bandwidth is tuned for
# prediction, not coefficient recovery, so it can lose to a fixed one.

for policy, h in (("h=5", 5.0), ("h=9", 9.0), ("AICc", h_opt)):
    fit = gwr_fit(trial, "quadratic", KernelSpec(bandwidth=h))
    mse = coefficient_mse(trial.truth, fit)
    print(f"{policy:>5}: MSE(b0) = {mse[0]:7.3f}, MSE(b1)x1e4 = {mse[1] * 1e4:8.3f}, "
          f"MSE(b2)x1e8 = {mse[2] * 1e8:8.3f}")

# %%
# Sanity check: with a near-flat kernel GWR collapses to ordinary least
# squares on the whole field.

flat = gwr_fit(trial, "quadratic", KernelSpec(bandwidth=1e6))
spread = np.ptp(flat.beta_hat, axis=0)
print(f"\nflat kernel: max spread of local estimates = {spread.max():.2e} "
      f"(all plots agree), tr(S) = {flat.trace_s:.3f}")
