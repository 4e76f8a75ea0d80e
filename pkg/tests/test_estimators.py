import numpy as np
import pytest

from mfpo import oracle
from mfpo import policy as pol
from mfpo.envs import ChainMDP, Trajectory, rollout_batch
from mfpo.errors import NonFiniteOutput
from mfpo.estimators import (
    EstimatorConfig,
    RunningMeanBaseline,
    batch_direction,
    gpomdp_grad,
    importance_weight,
    reinforce_grad,
    reward_to_go,
    step_coefficients,
    trajectory_return,
)
from mfpo.mdp import random_chain_mdp

from .conftest import random_params

REINFORCE = EstimatorConfig("reinforce", "zero")
GPOMDP = EstimatorConfig("gpomdp", "zero")


def traj_from(rewards, states=None, actions=None):
    L = len(rewards)
    states = np.zeros((L, 3)) if states is None else states
    actions = np.zeros(L, dtype=int) if actions is None else actions
    return Trajectory(states, actions, np.asarray(rewards, dtype=float), np.zeros(L))


def test_trajectory_return_examples():
    assert trajectory_return(traj_from([1, 1, 1]), 1.0) == 3.0
    assert trajectory_return(traj_from([1, 1]), 0.5) == 1.5
    assert trajectory_return(traj_from(np.ones(500)), 0.99) == pytest.approx((1 - 0.99**500) / 0.01, rel=1e-12)


def test_reward_to_go():
    np.testing.assert_allclose(reward_to_go([1.0, 2.0, 4.0], 0.5), [1 + 1 + 1, 1 + 1, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(kind="ppo")
    with pytest.raises(ValueError):
        EstimatorConfig(baseline_decay=1.0)
    with pytest.raises(ValueError):
        EstimatorConfig(gamma=0.0)
    with pytest.raises(ValueError):
        EstimatorConfig(weight_clip=0.0)


def test_reinforce_baseline_equal_to_return_vanishes(chain_arch, rng):
    tr = traj_from([0.3, 0.5, 0.1], rng.standard_normal((3, 3)), np.array([0, 1, 1]))
    R = trajectory_return(tr, 0.99)
    assert np.all(reinforce_grad(chain_arch, random_params(chain_arch, rng), tr, REINFORCE, R) == 0.0)


def test_gpomdp_single_step_equals_reinforce(chain_arch, rng):
    tr = traj_from([0.7], rng.standard_normal((1, 3)), np.array([1]))
    params = random_params(chain_arch, rng)
    np.testing.assert_array_equal(
        gpomdp_grad(chain_arch, params, tr, GPOMDP), reinforce_grad(chain_arch, params, tr, REINFORCE)
    )


def test_gpomdp_coefficients_match_causal_sum(chain_arch, rng):
    # -sum_h (sum_{h'<=h} score_h') gamma^(h-1) (r_h - b_h), written out directly
    tr = traj_from([0.3, -0.2, 0.9, 0.4], rng.standard_normal((4, 3)), np.array([0, 1, 1, 0]))
    params = random_params(chain_arch, rng)
    b = np.array([0.1, 0.2, -0.3, 0.05])
    scores = pol.grad_log_probs(chain_arch, params, tr.states, tr.actions)
    g = np.zeros_like(params)
    for h in range(4):
        g -= scores[: h + 1].sum(axis=0) * 0.99**h * (tr.rewards[h] - b[h])
    # per-step baseline b_h on rewards becomes a reward-to-go baseline sum_{k>=h} gamma^k b_k
    btg = reward_to_go(b, 0.99)
    np.testing.assert_allclose(gpomdp_grad(chain_arch, params, tr, GPOMDP, btg), g, atol=1e-12)


@pytest.mark.parametrize("cfg", [REINFORCE, GPOMDP], ids=["reinforce", "gpomdp"])
def test_enumeration_mean_equals_exact_gradient(chain_mdp, chain_arch, cfg):
    rng = np.random.default_rng(1)
    for _ in range(10):
        params = random_params(chain_arch, rng)
        mean = oracle.exact_estimator_mean(chain_mdp, chain_arch, params, params, cfg, weighted=False)
        assert np.max(np.abs(mean - oracle.exact_grad_J(chain_mdp, chain_arch, params))) <= 1e-10


@pytest.mark.parametrize("cfg", [REINFORCE, GPOMDP], ids=["reinforce", "gpomdp"])
def test_constant_baseline_invariance(chain_mdp, chain_arch, cfg):
    params = random_params(chain_arch, np.random.default_rng(2))
    m0 = oracle.exact_estimator_mean(chain_mdp, chain_arch, params, params, cfg, weighted=False, baseline=0.0)
    m5 = oracle.exact_estimator_mean(chain_mdp, chain_arch, params, params, cfg, weighted=False, baseline=5.0)
    assert np.max(np.abs(m0 - m5)) <= 1e-10


def test_importance_weight_identity(chain_env, chain_arch, rng):
    params = random_params(chain_arch, rng)
    for tr in rollout_batch(chain_env, chain_arch, params, 3, 5, rng):
        assert importance_weight(chain_arch, params, params.copy(), tr) == 1.0


def test_importance_weight_expectation_is_one(chain_mdp, chain_arch, rng):
    for _ in range(5):
        th_t, th_prev = random_params(chain_arch, rng), random_params(chain_arch, rng)
        total = sum(
            p * importance_weight(chain_arch, th_t, th_prev, tr)
            for tr, p in oracle.enumerate_trajectories(chain_mdp, chain_arch, th_t)
        )
        assert abs(total - 1.0) <= 1e-10


@pytest.mark.parametrize("cfg", [REINFORCE, GPOMDP], ids=["reinforce", "gpomdp"])
def test_weighted_estimator_targets_previous_params(chain_mdp, chain_arch, cfg):
    rng = np.random.default_rng(3)
    for _ in range(10):
        th_t, th_prev = random_params(chain_arch, rng), random_params(chain_arch, rng)
        total = np.zeros_like(th_t)
        for tr, p in oracle.enumerate_trajectories(chain_mdp, chain_arch, th_t):
            w = importance_weight(chain_arch, th_t, th_prev, tr)
            total += p * w * (reinforce_grad if cfg.kind == "reinforce" else gpomdp_grad)(chain_arch, th_prev, tr, cfg)
        assert np.max(np.abs(total - oracle.exact_grad_J(chain_mdp, chain_arch, th_prev))) <= 1e-10


def test_importance_weight_log_space(chain_arch):
    # a log-ratio of 700 must not overflow
    c = 700.0 / 3 + np.log(2)
    params_prev = np.zeros(pol.param_count(chain_arch))
    params_t = params_prev.copy()
    params_t[pol._slices(chain_arch)[3]] = [0.0, -c]
    tr = traj_from([0, 0, 0], np.ones((3, 3)), np.array([1, 1, 1]))
    w = importance_weight(chain_arch, params_t, params_prev, tr)
    assert np.isfinite(w) and w > 0
    assert np.log(w) == pytest.approx(700.0 + 3 * np.log1p(np.exp(-c)), rel=1e-12)


def test_importance_weight_clip(chain_arch, rng):
    cfg = EstimatorConfig(weight_clip=1.5)
    tr = traj_from([0, 0, 0], np.ones((3, 3)), np.array([1, 1, 1]))
    params = np.zeros(pol.param_count(chain_arch))
    other = params.copy()
    other[pol._slices(chain_arch)[3]] = [0.0, 5.0]
    assert importance_weight(chain_arch, params, other, tr, cfg) == 1.5


def test_importance_weight_non_finite(chain_arch):
    tr = traj_from([0.0], np.ones((1, 3)), np.array([0]))
    params = np.zeros(pol.param_count(chain_arch))
    bad = params.copy()
    bad[0] = np.nan
    with pytest.raises(NonFiniteOutput):
        importance_weight(chain_arch, params, bad, tr)


def test_batch_direction_basics(chain_env, chain_arch, rng):
    params = random_params(chain_arch, rng)
    trs = rollout_batch(chain_env, chain_arch, params, 3, 4, rng)
    one = gpomdp_grad(chain_arch, params, trs[0], GPOMDP)
    np.testing.assert_allclose(batch_direction(chain_arch, params, trs[:1], GPOMDP), one, atol=1e-15)
    np.testing.assert_allclose(batch_direction(chain_arch, params, [trs[0]] * 7, GPOMDP), one, atol=1e-14)
    mean = np.mean([gpomdp_grad(chain_arch, params, t, GPOMDP) for t in trs], axis=0)
    np.testing.assert_allclose(batch_direction(chain_arch, params, trs, GPOMDP), mean, atol=1e-14)


def test_batch_direction_monte_carlo(chain_mdp, chain_env, chain_arch):
    rng = np.random.default_rng(4)
    params = random_params(chain_arch, rng)
    n_batches, D = 10_000, 5
    trs = rollout_batch(chain_env, chain_arch, params, 3, n_batches * D, rng)
    per = np.array([gpomdp_grad(chain_arch, params, t, GPOMDP) for t in trs])
    batches = per.reshape(n_batches, D, -1).mean(axis=1)
    exact = oracle.exact_grad_J(chain_mdp, chain_arch, params)
    se = batches.std(axis=0, ddof=1) / np.sqrt(n_batches)
    assert np.all(np.abs(batches.mean(axis=0) - exact) <= 3 * se + 1e-12)


def test_gpomdp_variance_not_above_reinforce(chain_mdp, chain_env, chain_arch):
    rng = np.random.default_rng(5)
    params = random_params(chain_arch, rng)
    trs = rollout_batch(chain_env, chain_arch, params, 3, 10_000, rng)
    var = {}
    for name, fn, cfg in (("r", reinforce_grad, REINFORCE), ("g", gpomdp_grad, GPOMDP)):
        G = np.array([fn(chain_arch, params, t, cfg) for t in trs])
        var[name] = ((G - G.mean(axis=0)) ** 2).sum(axis=1).mean()
    assert var["g"] <= var["r"]
    assert oracle.estimator_variance(chain_mdp, chain_arch, params, GPOMDP) <= oracle.estimator_variance(
        chain_mdp, chain_arch, params, REINFORCE
    )


def test_running_mean_baseline():
    b = RunningMeanBaseline(0.9)
    np.testing.assert_array_equal(b.value(3), np.zeros(3))
    b.update([np.array([1.0, 2.0]), np.array([3.0])])
    np.testing.assert_allclose(b.value(3), [2.0, 2.0, 0.0])
    b.update([np.array([4.0, 4.0, 4.0])])
    np.testing.assert_allclose(b.value(3), [0.9 * 2 + 0.4, 0.9 * 2 + 0.4, 4.0])


def test_step_coefficients_with_array_baseline():
    tr = traj_from([1.0, 1.0])
    np.testing.assert_allclose(step_coefficients(tr, GPOMDP, np.array([0.5, 0.25, 9.0])), [0.5 - 1.99, 0.25 - 0.99])
    np.testing.assert_allclose(step_coefficients(tr, REINFORCE, np.array([0.5, 9.0])), [0.5 - 1.99] * 2)


def test_random_mdps_unbiased():
    # a few other seed-fixed MDPs with a different shape
    for seed in range(3):
        mdp = random_chain_mdp(n_states=2, n_actions=3, H=4, seed=seed)
        arch = pol.PolicyArch(2, 4, pol.Categorical(3))
        params = random_params(arch, np.random.default_rng(seed))
        exact = oracle.exact_grad_J(mdp, arch, params)
        for cfg in (REINFORCE, GPOMDP):
            m = oracle.exact_estimator_mean(mdp, arch, params, params, cfg, weighted=False)
            assert np.max(np.abs(m - exact)) <= 1e-10
    assert isinstance(ChainMDP(mdp).mdp, type(mdp))
