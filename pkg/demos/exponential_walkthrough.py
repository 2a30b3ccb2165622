"""Control variates on the exponential toy model, step by step.

The posterior is known exactly (Gamma(2, 2), mean 1), so every number below
can be checked by hand.  Run with ``python demos/exponential_walkthrough.py``.
"""

import numpy as np

from rvcv import ChainConfig, PolynomialSpec, SimConfig, controlled_values, exchange_chain, monomial_map, rv_estimate
from rvcv.grf import ExponentialModel
from rvcv.grf.exponential import exp_score

y = 2.0
model = ExponentialModel(y)

# With the exact score, a quadratic trial function removes all variance.
theta = np.random.default_rng(0).gamma(2.0, 1 / y, size=5)
m = monomial_map(theta[:, None], exp_score(theta, y)[:, None], PolynomialSpec(1, 2))
print("exact score, phi = [0, 1/4]:", controlled_values(theta, m, [0.0, 0.25]))

# With simulated scores the reduction depends on K.
config = ChainConfig(iterations=10000, proposal_sd=0.8, initial_theta=[1.0], seed=7, burn_in=500)
chain = exchange_chain(model, config, SimConfig(K=100))
print(f"exchange acceptance rate {chain.acceptance_rate:.2f}")
for K in (1, 10, 100):
    u = chain.scores(K)
    est = rv_estimate(chain.thetas[:, 0], monomial_map(chain.thetas, u, PolynomialSpec(1, 2)))
    print(f"K={K:>3}: plain {est.mu_plain:.4f}  controlled {est.mu_controlled:.5f}  "
          f"R={est.diagnostics.R:7.1f}  rho={est.diagnostics.rho:+.4f}")
