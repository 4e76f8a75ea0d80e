"""Momentum-assisted federated policy optimization (MFPO).

Each of ``N`` agents keeps a parameter vector and a momentum direction. At
every step ``t`` an agent samples ``D`` trajectories with its current
parameters and forms the variance-reduced direction::

    u_t = nu_t * (u_{t-1} - mean_j[w_j * g(theta_{t-1}; tau_j)]) + mean_j[g(theta_t; tau_j)]

where ``w_j = p(tau_j | theta_{t-1}) / p(tau_j | theta_t)`` re-weights the
old-parameter estimate onto the new samples. Between communications
(``t mod K != 0``) agents descend locally along ``u_t``. Every ``K`` steps
the server averages parameters and directions, takes its own descent step
``theta_bar - alpha_t * u_bar`` and broadcasts both back.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from . import oracle
from . import policy as pol
from . import seeding
from .envs import ChainMDP, rollout_batch
from .errors import DimensionMismatch, NonFiniteOutput
from .estimators import (
    EstimatorConfig,
    TrajectoryBatch,
    baseline_targets,
    batch_direction,
    make_baseline,
)
from .metrics import MetricsRecord, evaluate_policy
from .schedules import PracticalSchedule, TheorySchedule, momentum, stepsize


@dataclass(frozen=True)
class HyperParams:
    N: int
    K: int
    D: int
    T: int
    schedule: Union[TheorySchedule, PracticalSchedule] = field(default_factory=PracticalSchedule)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    D_tilde: Optional[int] = None  # defaults to D * K
    eval_episodes: int = 20

    def __post_init__(self):
        for name in ("N", "K", "D", "T"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.T % self.K != 0:
            raise ValueError(f"T={self.T} must be a multiple of K={self.K}")
        if self.D_tilde is None:
            object.__setattr__(self, "D_tilde", self.D * self.K)
        elif self.D_tilde < 1:
            raise ValueError("D_tilde must be positive")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be positive")

    @property
    def rounds(self) -> int:
        return self.T // self.K


@dataclass(eq=False)
class AgentState:
    index: int
    theta: np.ndarray
    theta_prev: np.ndarray
    direction: np.ndarray
    master_seed: int
    baseline: object
    step: int = 0

    def stream(self, t: int) -> np.random.Generator:
        """Rollout stream for step ``t``; independent of every other agent and step."""
        return seeding.stream(self.master_seed, seeding.STEP, self.index, t)


def initial_params(arch, master_seed: int) -> np.ndarray:
    return pol.init_params(arch, seeding.stream(master_seed, seeding.PARAMS))


def init_agents(arch, env, hp: HyperParams, master_seed: int, theta0=None):
    """Identical parameters for all agents; each direction starts as a D_tilde-trajectory batch mean.

    Returns ``(agents, theta_bar, interactions)``.
    """
    theta0 = initial_params(arch, master_seed) if theta0 is None else np.array(theta0, dtype=float)
    agents = []
    interactions = 0
    for i in range(hp.N):
        rng = seeding.stream(master_seed, seeding.INIT, i)
        trajs = rollout_batch(env, arch, theta0, env.spec.horizon, hp.D_tilde, rng)
        interactions += sum(t.length for t in trajs)
        baseline = make_baseline(hp.estimator)
        u = batch_direction(arch, theta0, trajs, hp.estimator, baseline.value(env.spec.horizon))
        agents.append(AgentState(i, theta0.copy(), theta0.copy(), u, master_seed, baseline))
    return agents, theta0.copy(), interactions


def local_direction(arch, agent: AgentState, trajs, nu: float, cfg: EstimatorConfig, baseline=0.0):
    """Momentum direction from fresh trajectories sampled under ``agent.theta``."""
    batch = TrajectoryBatch(trajs, cfg, baseline)
    ev_now = batch.evaluate(arch, agent.theta)
    fresh = ev_now.vjp(batch.coef / batch.n)
    if nu == 0.0:
        return fresh
    ev_prev = batch.evaluate(arch, agent.theta_prev)
    w = batch.weights(ev_now, ev_prev)
    stale = ev_prev.vjp(batch.coef * w[batch.traj_idx] / batch.n)
    u = nu * (agent.direction - stale) + fresh
    if not np.all(np.isfinite(u)):
        raise NonFiniteOutput("non-finite local direction")
    return u


def local_update(agent: AgentState, direction, alpha: float) -> AgentState:
    agent.theta_prev = agent.theta
    agent.theta = agent.theta - alpha * direction
    agent.direction = direction
    agent.step += 1
    return agent


def _mean_in_order(vectors):
    acc = np.array(vectors[0], dtype=float, copy=True)
    for v in vectors[1:]:
        if v.shape != acc.shape:
            raise DimensionMismatch(f"shape {v.shape} does not match {acc.shape}")
        acc += v
    return acc / len(vectors)


def global_aggregate(agents: List[AgentState], directions=None):
    """Average directions and parameters in agent-index order: ``(u_bar, theta_bar)``."""
    directions = [a.direction for a in agents] if directions is None else directions
    return _mean_in_order(directions), _mean_in_order([a.theta for a in agents])


def server_adjust(theta_bar, u_bar, alpha: float):
    return theta_bar - alpha * u_bar


def synchronize(agents: List[AgentState], theta_bar, u_bar) -> List[AgentState]:
    for a in agents:
        a.theta_prev = a.theta
        a.theta = theta_bar.copy()
        a.direction = u_bar.copy()
        a.step += 1
    return agents


@dataclass
class TrainingResult:
    theta: np.ndarray
    metrics: List[MetricsRecord]
    initial_grad_norm_sq: Optional[float] = None
    theta_trace: List[np.ndarray] = field(default_factory=list)
    stopped_early: bool = False


class _Recorder:
    """Shared per-round bookkeeping for MFPO and the FedPG baseline."""

    def __init__(self, env, arch, hp, master_seed, metrics_sink, stop_return, record_trace):
        self.env, self.arch, self.hp, self.master_seed = env, arch, hp, master_seed
        self.sink = metrics_sink
        self.stop_return = stop_return
        self.record_trace = record_trace
        self.records: List[MetricsRecord] = []
        self.trace: List[np.ndarray] = []
        self.start = time.perf_counter()
        self.enumeration = oracle.Enumeration(env.mdp) if isinstance(env, ChainMDP) else None

    def grad_norm_sq(self, theta):
        if self.enumeration is None:
            return None
        return oracle.grad_norm_sq(self.enumeration, self.arch, theta)

    def round_done(self, round_index, t, interactions, theta_bar) -> bool:
        try:
            mean, std = evaluate_policy(
                self.env, self.arch, theta_bar, self.hp.eval_episodes, self.master_seed, round_index
            )
        except NonFiniteOutput as exc:
            raise NonFiniteOutput(f"evaluation after step {t}: {exc}") from exc
        rec = MetricsRecord(
            round=round_index,
            step=t,
            env_interactions=int(interactions),
            comm_rounds=round_index,
            eval_return_mean=mean,
            eval_return_std=std,
            grad_norm_sq=self.grad_norm_sq(theta_bar),
            wall_ms=int((time.perf_counter() - self.start) * 1000),
        )
        self.records.append(rec)
        if self.record_trace:
            self.trace.append(theta_bar.copy())
        if self.sink is not None:
            self.sink(rec)
        return self.stop_return is not None and mean >= self.stop_return


def run_training(
    hp: HyperParams,
    arch,
    env,
    master_seed: int,
    metrics_sink: Optional[Callable[[MetricsRecord], None]] = None,
    stop_return: Optional[float] = None,
    record_trace: bool = False,
    theta0=None,
) -> TrainingResult:
    """Run ``hp.T`` MFPO steps; one metrics record per communication round.

    ``stop_return`` ends training after the first round whose evaluation
    return reaches it. ``env_interactions`` counts every action taken by
    every agent, initialization rollouts included.
    """
    H = env.spec.horizon
    agents, theta_bar, interactions = init_agents(arch, env, hp, master_seed, theta0)
    rec = _Recorder(env, arch, hp, master_seed, metrics_sink, stop_return, record_trace)
    initial_gns = rec.grad_norm_sq(theta_bar)
    stopped = False
    for t in range(1, hp.T + 1):
        alpha = stepsize(t, hp.schedule)
        nu = momentum(t, hp.schedule, stepsize(t - 1, hp.schedule))
        global_step = t % hp.K == 0
        new_dirs = []
        for agent in agents:
            try:
                trajs = rollout_batch(env, arch, agent.theta, H, hp.D, agent.stream(t))
                interactions += sum(tr.length for tr in trajs)
                b = agent.baseline.value(H)
                u = local_direction(arch, agent, trajs, nu, hp.estimator, b)
                agent.baseline.update([baseline_targets(tr, hp.estimator) for tr in trajs])
            except NonFiniteOutput as exc:
                raise NonFiniteOutput(f"agent {agent.index} at step {t}: {exc}") from exc
            if global_step:
                new_dirs.append(u)
            else:
                local_update(agent, u, alpha)
        if global_step:
            u_bar, theta_avg = global_aggregate(agents, new_dirs)
            theta_bar = server_adjust(theta_avg, u_bar, alpha)
            if not np.all(np.isfinite(theta_bar)):
                raise NonFiniteOutput(f"server parameters became non-finite at step {t}")
            synchronize(agents, theta_bar, u_bar)
            if rec.round_done(t // hp.K, t, interactions, theta_bar):
                stopped = True
                break
    return TrainingResult(theta_bar, rec.records, initial_gns, rec.trace, stopped)
