"""Per-round metrics shared by every training loop."""

from dataclasses import astuple, dataclass, fields
from typing import Optional

import numpy as np

from . import seeding
from .envs import rollout_batch

CSV_COLUMNS = (
    "round",
    "step",
    "env_interactions",
    "comm_rounds",
    "eval_return_mean",
    "eval_return_std",
    "grad_norm_sq",
    "wall_ms",
)


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    step: int
    env_interactions: int
    comm_rounds: int
    eval_return_mean: float
    eval_return_std: float
    grad_norm_sq: Optional[float]
    wall_ms: int

    def as_row(self):
        return astuple(self)


assert tuple(f.name for f in fields(MetricsRecord)) == CSV_COLUMNS


def evaluate_policy(env, arch, params, episodes: int, master_seed: int, round_index: int):
    """Mean and std of undiscounted returns over ``episodes`` stochastic rollouts."""
    rng = seeding.stream(master_seed, seeding.EVAL, round_index)
    trajs = rollout_batch(env, arch, params, env.spec.horizon, episodes, rng)
    returns = np.array([t.rewards.sum() for t in trajs])
    return float(returns.mean()), float(returns.std())
