"""FedAvg combined with mini-batch policy gradient (FedPG).

Agents take ``K`` plain policy-gradient steps on their own data, then the
server averages parameters and broadcasts the average. There is no
direction exchange, no momentum, no importance weighting and no
server-side step, so differences against MFPO isolate those mechanisms.
Seeding matches MFPO: step ``t`` of agent ``i`` draws from the same stream.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import seeding
from .algorithm import TrainingResult, _mean_in_order, _Recorder, initial_params
from .envs import rollout_batch
from .errors import NonFiniteOutput
from .estimators import EstimatorConfig, baseline_targets, batch_direction, make_baseline
from .schedules import PracticalSchedule, stepsize


@dataclass(frozen=True)
class FedPgParams:
    N: int
    K: int
    D: int
    T: int
    schedule: PracticalSchedule = field(default_factory=PracticalSchedule)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    eval_episodes: int = 20

    def __post_init__(self):
        for name in ("N", "K", "D", "T"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.T % self.K != 0:
            raise ValueError(f"T={self.T} must be a multiple of K={self.K}")
        if not isinstance(self.schedule, PracticalSchedule):
            raise ValueError("FedPG uses the practical stepsize schedule only")

    @property
    def rounds(self) -> int:
        return self.T // self.K


def fedpg_run_training(
    params: FedPgParams,
    arch,
    env,
    master_seed: int,
    metrics_sink: Optional[Callable] = None,
    stop_return: Optional[float] = None,
    record_trace: bool = False,
    theta0=None,
) -> TrainingResult:
    H = env.spec.horizon
    theta_bar = initial_params(arch, master_seed) if theta0 is None else np.array(theta0, dtype=float)
    thetas = [theta_bar.copy() for _ in range(params.N)]
    baselines = [make_baseline(params.estimator) for _ in range(params.N)]
    rec = _Recorder(env, arch, params, master_seed, metrics_sink, stop_return, record_trace)
    initial_gns = rec.grad_norm_sq(theta_bar)
    interactions = 0
    stopped = False
    for t in range(1, params.T + 1):
        alpha = stepsize(t, params.schedule)
        for i in range(params.N):
            rng = seeding.stream(master_seed, seeding.STEP, i, t)
            try:
                trajs = rollout_batch(env, arch, thetas[i], H, params.D, rng)
                interactions += sum(tr.length for tr in trajs)
                g = batch_direction(arch, thetas[i], trajs, params.estimator, baselines[i].value(H))
            except NonFiniteOutput as exc:
                raise NonFiniteOutput(f"agent {i} at step {t}: {exc}") from exc
            baselines[i].update([baseline_targets(tr, params.estimator) for tr in trajs])
            thetas[i] = thetas[i] - alpha * g
        if t % params.K == 0:
            theta_bar = _mean_in_order(thetas)
            if not np.all(np.isfinite(theta_bar)):
                raise NonFiniteOutput(f"server parameters became non-finite at step {t}")
            thetas = [theta_bar.copy() for _ in range(params.N)]
            if rec.round_done(t // params.K, t, interactions, theta_bar):
                stopped = True
                break
    return TrainingResult(theta_bar, rec.records, initial_gns, rec.trace, stopped)
