"""Momentum-assisted federated policy optimization, simulated at desk scale."""

from .algorithm import AgentState, HyperParams, TrainingResult, run_training
from .baselines import FedPgParams, fedpg_run_training
from .envs import CartPole, ChainMDP, Pendulum, Trajectory, make_env, rollout, rollout_batch
from .estimators import EstimatorConfig
from .mdp import TabularMDP, random_chain_mdp
from .metrics import MetricsRecord
from .policy import Categorical, PolicyArch, TanhGaussian, param_count
from .schedules import PracticalSchedule, TheorySchedule

__all__ = [
    "AgentState",
    "CartPole",
    "Categorical",
    "ChainMDP",
    "EstimatorConfig",
    "FedPgParams",
    "HyperParams",
    "MetricsRecord",
    "Pendulum",
    "PolicyArch",
    "PracticalSchedule",
    "TabularMDP",
    "TanhGaussian",
    "TheorySchedule",
    "Trajectory",
    "TrainingResult",
    "fedpg_run_training",
    "make_env",
    "param_count",
    "random_chain_mdp",
    "rollout",
    "rollout_batch",
    "run_training",
]
