"""
Federated training with momentum
================================

Five agents run MFPO on the chain MDP with the step sizes from the
convergence analysis. The exact gradient norm of the server parameters
is tracked each round; the same run with plain FedAvg-style policy
gradient is shown for reference.
"""

import numpy as np

from mfpo import (ChainMDP, FedPgParams, HyperParams, PolicyArch, PracticalSchedule,
                  TheorySchedule, fedpg_run_training, run_training)
from mfpo.policy import Categorical

env = ChainMDP()
arch = PolicyArch(3, 4, Categorical(2))
N, K, D, T = 5, 5, 10, 500

hp = HyperParams(N=N, K=K, D=D, T=T, schedule=TheorySchedule(K, D, N), eval_episodes=20)
print("theory stepsize %.5f (bound 1/(16K) = %.5f)" % (hp.schedule.alpha(0), hp.schedule.max_alpha))
res = run_training(hp, arch, env, master_seed=0)
print("initial |grad J|^2 = %.5f" % res.initial_grad_norm_sq)
for r in res.metrics[::20]:
    print(f"round {r.round:3d}  interactions {r.env_interactions:7d}  return {r.eval_return_mean:.3f}  |grad J|^2 {r.grad_norm_sq:.5f}")
print("final ratio %.3f" % (res.metrics[-1].grad_norm_sq / res.initial_grad_norm_sq))

# plain local SGD + averaging with a constant stepsize of the same size
fp = FedPgParams(N=N, K=K, D=D, T=T, schedule=PracticalSchedule(hp.schedule.alpha(0), decay=1.0))
base = fedpg_run_training(fp, arch, env, master_seed=0)
print("fedpg final ratio %.3f" % (base.metrics[-1].grad_norm_sq / base.initial_grad_norm_sq))
