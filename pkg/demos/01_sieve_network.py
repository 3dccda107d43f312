"""
Fitting a constrained sigmoid network
=====================================

A one-hidden-layer network whose output weights and per-unit input weights
live in l1 balls, trained by projected subgradient descent.
"""

import numpy as np

from sqlr import Dataset, SieveNetwork, TrainConfig, init_network, mse, phi_hat, train

rng = np.random.default_rng(0)
x = rng.uniform(-1, 1, (300, 2))
y = np.sin(2 * x[:, 0]) + 0.1 * rng.normal(size=300)
data = Dataset(x, y)

# %%
# Start from a small random network.  Projection after every step keeps the
# iterate inside both budgets, so the starting point must be feasible too.
net0 = init_network(r=10, d=2, scale=0.5, seed=1)
print("feasible start:", net0.is_feasible(), " loss:", round(mse(net0, data), 4))

# %%
# Train with step 0.5/log(e+k).  The returned network is the best iterate seen.
losses = []
fit, final_loss = train(data, TrainConfig(iterations=2000, step_base=0.5, seed=1), net0,
            callback=lambda k, net: losses.append(mse(net, data)) if k % 500 == 0 else None)
print("loss every 500 iterations:", np.round(losses, 4))
print("final loss:", round(final_loss, 4), " feasible:", fit.is_feasible())

# %%
# The second column never enters the response, so the average squared slope
# along it should be far smaller than along the first.
print("mean squared slope, X1:", round(phi_hat(fit, data, [0]), 4))
print("mean squared slope, X2:", round(phi_hat(fit, data, [1]), 4))

# %%
# Budgets are hard limits, not penalties.  Shrinking V caps the output weights.
tight = SieveNetwork(fit.alpha0, fit.alphas, fit.gammas, fit.gamma0s, v_budget=5.0)
print("fits V=5?", tight.is_feasible(), " output l1 norm:", round(fit.output_norm(), 3))
