"""
Exact gradients on a tabular chain
==================================

On a small MDP every trajectory can be listed, so expectations become
finite sums. This notebook checks the policy-gradient estimators against
that ground truth, including the importance-weighted form used to carry
momentum across parameter changes.
"""

import numpy as np

from mfpo import PolicyArch, random_chain_mdp
from mfpo import oracle
from mfpo.estimators import EstimatorConfig
from mfpo.policy import Categorical, param_count

mdp = random_chain_mdp(seed=0)
arch = PolicyArch(mdp.n_states, 4, Categorical(mdp.n_actions))
rng = np.random.default_rng(1)
theta = rng.standard_normal(param_count(arch))
print("trajectories in the support:", oracle.support_size(mdp))
print("J(theta) = %.6f" % oracle.exact_J(mdp, arch, theta))

grad = oracle.exact_grad_J(mdp, arch, theta)

# central differences of J agree with the enumerated gradient
h = 1e-6
fd = np.array([(oracle.exact_J(mdp, arch, theta + h * e) - oracle.exact_J(mdp, arch, theta - h * e)) / (2 * h)
               for e in np.eye(theta.size)])
print("finite-difference gap: %.2e" % np.abs(fd - grad).max())

# both estimators are unbiased, with or without a constant baseline
for kind in ("reinforce", "gpomdp"):
    cfg = EstimatorConfig(kind, "zero")
    for b in (0.0, 5.0):
        m = oracle.exact_estimator_mean(mdp, arch, theta, theta, cfg, weighted=False, baseline=b)
        print(f"{kind:9s} b={b}: max |E g - grad J| = {np.abs(m - grad).max():.1e}")

# sampling at theta and reweighting recovers the gradient at another point
other = rng.standard_normal(theta.size)
cfg = EstimatorConfig("gpomdp", "zero")
m = oracle.exact_estimator_mean(mdp, arch, theta, other, cfg, weighted=True)
print("importance-weighted gap: %.1e" % np.abs(m - oracle.exact_grad_J(mdp, arch, other)).max())

# the causal estimator has lower variance
for kind in ("reinforce", "gpomdp"):
    v = oracle.estimator_variance(mdp, arch, theta, EstimatorConfig(kind, "zero"))
    print(f"{kind:9s} single-trajectory variance {v:.4f}")
