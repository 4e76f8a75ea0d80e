"""Policy-gradient estimators and trajectory importance weights.

The objective is *minimized*: ``J(theta) = -E[r(tau)]``. Every estimator
therefore returns an unbiased estimate of the gradient of the negative
discounted return, and descent steps subtract it.

Both estimators are linear in the per-step scores, ``g = sum_h c_h * grad
log pi(a_h|s_h)``, so a batch of trajectories is handled by one
vector-Jacobian product over all of its steps. ``step_coefficients`` gives
the ``c_h`` of one trajectory:

* REINFORCE: ``c_h = b - R(tau)`` with ``R`` the discounted return.
* GPOMDP:    ``c_h = -(G_h - b_h)`` where ``G_h = sum_{k>=h} gamma^(k-1) r_k``
  is the (start-discounted) reward-to-go. With ``b = 0`` this is the same as
  ``-sum_h (sum_{k<=h} grad log pi_k) gamma^(h-1) r_h``.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import policy as pol
from .errors import NonFiniteOutput

REINFORCE = "reinforce"
GPOMDP = "gpomdp"


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = GPOMDP
    baseline: str = "running_mean"  # or "zero"
    baseline_decay: float = 0.9
    gamma: float = 0.99
    weight_clip: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (REINFORCE, GPOMDP):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.baseline not in ("running_mean", "zero"):
            raise ValueError(f"unknown baseline mode {self.baseline!r}")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError("baseline_decay must lie in [0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.weight_clip is not None and self.weight_clip <= 0:
            raise ValueError("weight_clip must be positive")


def discounts(length: int, gamma: float) -> np.ndarray:
    return gamma ** np.arange(length, dtype=float)


def trajectory_return(traj, gamma: float) -> float:
    return float(np.dot(discounts(traj.length, gamma), traj.rewards))


def reward_to_go(rewards, gamma: float) -> np.ndarray:
    disc = discounts(len(rewards), gamma) * np.asarray(rewards, dtype=float)
    return np.cumsum(disc[::-1])[::-1]


def baseline_targets(traj, cfg: EstimatorConfig) -> np.ndarray:
    """What a baseline for this estimator regresses on, per step (REINFORCE: one entry)."""
    if cfg.kind == REINFORCE:
        return np.array([trajectory_return(traj, cfg.gamma)])
    return reward_to_go(traj.rewards, cfg.gamma)


class RunningMeanBaseline:
    """Exponential moving average of baseline targets, kept per time index.

    Each index is initialized with the first batch mean that reaches it.
    Indices never seen yet give a baseline of zero.
    """

    def __init__(self, decay: float = 0.9):
        self.decay = decay
        self.mean = np.zeros(0)
        self.seen = np.zeros(0, dtype=bool)

    def value(self, length: int) -> np.ndarray:
        out = np.zeros(length)
        k = min(length, self.mean.size)
        out[:k] = np.where(self.seen[:k], self.mean[:k], 0.0)
        return out

    def update(self, targets: Sequence[np.ndarray]):
        n = max((len(t) for t in targets), default=0)
        if n > self.mean.size:
            self.mean = np.concatenate([self.mean, np.zeros(n - self.mean.size)])
            self.seen = np.concatenate([self.seen, np.zeros(n - self.seen.size, dtype=bool)])
        total = np.zeros(n)
        count = np.zeros(n)
        for t in targets:
            total[: len(t)] += t
            count[: len(t)] += 1
        hit = count > 0
        batch = np.divide(total, count, out=np.zeros(n), where=hit)
        old = self.seen[:n] & hit
        new = ~self.seen[:n] & hit
        self.mean[:n][old] = self.decay * self.mean[:n][old] + (1.0 - self.decay) * batch[old]
        self.mean[:n][new] = batch[new]
        self.seen[:n] |= hit


class ZeroBaseline:
    def value(self, length: int) -> np.ndarray:
        return np.zeros(length)

    def update(self, targets):
        pass


def make_baseline(cfg: EstimatorConfig):
    if cfg.baseline == "zero":
        return ZeroBaseline()
    return RunningMeanBaseline(cfg.baseline_decay)


def _baseline_array(baseline, length):
    b = np.asarray(baseline, dtype=float)
    if b.ndim == 0:
        return np.full(length, float(b))
    out = np.zeros(length)
    k = min(length, b.size)
    out[:k] = b[:k]
    return out


def step_coefficients(traj, cfg: EstimatorConfig, baseline=0.0) -> np.ndarray:
    """Per-step weights ``c_h`` with ``g(theta; tau) = sum_h c_h grad log pi(a_h|s_h)``.

    ``baseline`` is a scalar or a per-time-index array; REINFORCE uses its
    first entry.
    """
    L = traj.length
    if cfg.kind == REINFORCE:
        b = _baseline_array(baseline, 1)[0]
        return np.full(L, b - trajectory_return(traj, cfg.gamma))
    return _baseline_array(baseline, L) - reward_to_go(traj.rewards, cfg.gamma)


class TrajectoryBatch:
    """Steps of several trajectories concatenated for batched evaluation."""

    def __init__(self, trajs, cfg: EstimatorConfig, baseline=0.0):
        trajs = list(trajs)
        if not trajs:
            raise ValueError("need at least one trajectory")
        self.n = len(trajs)
        lengths = np.array([t.length for t in trajs])
        self.traj_idx = np.repeat(np.arange(self.n), lengths)
        self.states = np.concatenate([t.states for t in trajs])
        self.actions = np.concatenate([t.actions for t in trajs])
        self.coef = np.concatenate([step_coefficients(t, cfg, baseline) for t in trajs])
        self.cfg = cfg

    def per_traj(self, step_values):
        return np.bincount(self.traj_idx, weights=step_values, minlength=self.n)

    def weights(self, eval_sample, eval_other):
        """Importance weights ``p(tau|other) / p(tau|sample)`` from two evaluations."""
        log_ratio = self.per_traj(eval_other.logp) - self.per_traj(eval_sample.logp)
        if not np.all(np.isfinite(log_ratio)):
            raise NonFiniteOutput("non-finite trajectory log-probability")
        w = np.exp(log_ratio)
        if self.cfg.weight_clip is not None:
            w = np.minimum(w, self.cfg.weight_clip)
        return w

    def evaluate(self, arch, params):
        return pol.evaluate(arch, params, self.states, self.actions)


def estimator_grad(arch, params, traj, cfg: EstimatorConfig, baseline=0.0) -> np.ndarray:
    if traj.length == 0:
        return np.zeros(pol.param_count(arch))
    ev = pol.evaluate(arch, params, traj.states, traj.actions)
    return ev.vjp(step_coefficients(traj, cfg, baseline))


def reinforce_grad(arch, params, traj, cfg: EstimatorConfig, baseline=0.0) -> np.ndarray:
    """``(b - R(tau)) * sum_h grad log pi(a_h|s_h)``."""
    if cfg.kind != REINFORCE:
        cfg = EstimatorConfig(REINFORCE, cfg.baseline, cfg.baseline_decay, cfg.gamma, cfg.weight_clip)
    return estimator_grad(arch, params, traj, cfg, baseline)


def gpomdp_grad(arch, params, traj, cfg: EstimatorConfig, baseline=0.0) -> np.ndarray:
    """``-sum_h grad log pi(a_h|s_h) * (G_h - b_h)``."""
    if cfg.kind != GPOMDP:
        cfg = EstimatorConfig(GPOMDP, cfg.baseline, cfg.baseline_decay, cfg.gamma, cfg.weight_clip)
    return estimator_grad(arch, params, traj, cfg, baseline)


def importance_weight(arch, params_t, params_prev, traj, cfg: Optional[EstimatorConfig] = None) -> float:
    """Likelihood ratio ``p(tau|params_prev) / p(tau|params_t)``, formed in log space."""
    lp_prev = pol.traj_log_prob(arch, params_prev, traj)
    lp_t = pol.traj_log_prob(arch, params_t, traj)
    if not (np.isfinite(lp_prev) and np.isfinite(lp_t)):
        raise NonFiniteOutput("non-finite trajectory log-probability")
    w = float(np.exp(lp_prev - lp_t))
    if cfg is not None and cfg.weight_clip is not None:
        w = min(w, cfg.weight_clip)
    return w


def batch_direction(arch, params, trajs: List, cfg: EstimatorConfig, baseline=0.0) -> np.ndarray:
    """Mean estimator output over a batch of trajectories."""
    batch = TrajectoryBatch(trajs, cfg, baseline)
    return batch.evaluate(arch, params).vjp(batch.coef / batch.n)
