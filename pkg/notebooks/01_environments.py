"""
Environments and rollouts
=========================

The three built-in environments share one vectorized interface. This
walks through a few episodes of each with a randomly initialized policy.
"""

import numpy as np

from mfpo import CartPole, ChainMDP, Pendulum, PolicyArch, rollout_batch
from mfpo.policy import Categorical, TanhGaussian, init_params

rng = np.random.default_rng(0)

# CartPole: 4-d state, two actions, reward 1 per step until the pole falls
env = CartPole()
arch = PolicyArch(4, 16, Categorical(2))
params = init_params(arch, rng)
trajs = rollout_batch(env, arch, params, env.spec.horizon, 20, rng)
lengths = np.array([t.length for t in trajs])
print("cartpole episode lengths:", lengths)
print("mean return %.1f (equals mean length)" % np.mean([t.rewards.sum() for t in trajs]))

# Pendulum: observation (cos th, sin th, th_dot), torque in [-2, 2]
env = Pendulum()
arch = PolicyArch(3, 16, TanhGaussian(1))
params = init_params(arch, rng)
trajs = rollout_batch(env, arch, params, env.spec.horizon, 5, rng)
print("pendulum returns:", np.round([t.rewards.sum() for t in trajs], 1))
# actions are stored before the tanh squash; the torque applied is 2 * tanh(u)
print("first torques:", np.round(2 * np.tanh(trajs[0].actions[:5, 0]), 3))

# ChainMDP: three one-hot states, two actions, horizon 3
env = ChainMDP()
arch = PolicyArch(3, 4, Categorical(2))
params = init_params(arch, rng)
for t in rollout_batch(env, arch, params, 3, 3, rng):
    print("chain states", t.states.argmax(axis=1), "actions", t.actions, "rewards", np.round(t.rewards, 3))

# every trajectory carries the log-probabilities of its own actions
print("stored behaviour log-probs:", np.round(t.behavior_logps, 4))
