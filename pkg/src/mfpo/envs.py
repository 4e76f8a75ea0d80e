"""Environments and trajectory sampling.

All environments are vectorized: ``reset_batch`` and ``step_batch`` act on
a stack of states, and the single-state ``reset``/``step`` are the batch
versions with one row. Environments hold no mutable state; the state vector
is passed in and out explicitly.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from . import policy as pol
from .errors import InvalidAction
from .mdp import TabularMDP, random_chain_mdp


@dataclass(frozen=True)
class Discrete:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Discrete action space needs n >= 2")


@dataclass(frozen=True)
class Continuous:
    dim: int
    low: Tuple[float, ...]
    high: Tuple[float, ...]

    def __post_init__(self):
        if self.dim < 1 or len(self.low) != self.dim or len(self.high) != self.dim:
            raise ValueError("Continuous bounds must have length dim >= 1")
        if not all(lo < hi for lo, hi in zip(self.low, self.high)):
            raise ValueError("lower bounds must be strictly below upper bounds")


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    action_space: Union[Discrete, Continuous]
    horizon: int
    reward_bounds: Tuple[float, float]


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    terminal: bool


@dataclass(eq=False)
class Trajectory:
    """One episode. ``actions`` are in the policy's native representation."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    behavior_logps: np.ndarray

    def __post_init__(self):
        n = len(self.rewards)
        if not (len(self.states) == len(self.actions) == len(self.behavior_logps) == n):
            raise ValueError("trajectory fields must have equal length")

    @property
    def length(self) -> int:
        return len(self.rewards)

    def __len__(self):
        return self.length


class Environment:
    """Base class. Subclasses define ``spec``, ``reset_batch`` and ``_step_batch``."""

    name = "env"
    spec: EnvSpec

    def reset_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def _step_batch(self, states, actions, rng):
        raise NotImplementedError

    def check_actions(self, actions):
        space = self.spec.action_space
        actions = np.asarray(actions)
        if isinstance(space, Discrete):
            if actions.dtype.kind not in "iu":
                if not np.all(np.mod(actions, 1) == 0):
                    raise InvalidAction(f"discrete actions must be integers, got {actions!r}")
            if np.any(actions < 0) or np.any(actions >= space.n):
                raise InvalidAction(f"action outside range [0, {space.n})")
            return actions.astype(np.intp).reshape(-1)
        actions = np.asarray(actions, dtype=float).reshape(-1, space.dim)
        low, high = np.asarray(space.low), np.asarray(space.high)
        if not np.all(np.isfinite(actions)) or np.any(actions < low) or np.any(actions > high):
            raise InvalidAction(f"action outside bounds [{space.low}, {space.high}]")
        return actions

    def step_batch(self, states, actions, rng: np.random.Generator):
        """Returns ``(next_states, rewards, terminal)`` for a stack of states."""
        actions = self.check_actions(actions)
        return self._step_batch(np.asarray(states, dtype=float), actions, rng)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return self.reset_batch(rng, 1)[0]

    def step(self, state, action, rng: Optional[np.random.Generator] = None) -> StepResult:
        s, r, done = self.step_batch(np.asarray(state, dtype=float)[None], [action], rng)
        return StepResult(s[0], float(r[0]), bool(done[0]))


class CartPole(Environment):
    """Classic cart-pole balancing, Euler-integrated, reward 1 per step."""

    name = "cartpole"
    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    length = 0.5  # half the pole length
    force_mag = 10.0
    tau = 0.02
    x_threshold = 2.4
    theta_threshold = 12 * 2 * np.pi / 360

    def __init__(self, horizon: int = 500):
        self.spec = EnvSpec(4, Discrete(2), horizon, (0.0, 1.0))

    def reset_batch(self, rng, n):
        return rng.uniform(-0.05, 0.05, size=(n, 4))

    def _step_batch(self, states, actions, rng):
        x, x_dot, theta, theta_dot = states.T
        total_mass = self.masspole + self.masscart
        polemass_length = self.masspole * self.length
        force = np.where(actions == 1, self.force_mag, -self.force_mag)
        cos, sin = np.cos(theta), np.sin(theta)
        temp = (force + polemass_length * theta_dot**2 * sin) / total_mass
        thetaacc = (self.gravity * sin - cos * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * cos**2 / total_mass)
        )
        xacc = temp - polemass_length * thetaacc * cos / total_mass
        nxt = np.stack(
            [
                x + self.tau * x_dot,
                x_dot + self.tau * xacc,
                theta + self.tau * theta_dot,
                theta_dot + self.tau * thetaacc,
            ],
            axis=1,
        )
        terminal = (np.abs(nxt[:, 0]) > self.x_threshold) | (np.abs(nxt[:, 2]) > self.theta_threshold)
        return nxt, np.ones(len(states)), terminal


def angle_normalize(th):
    return ((th + np.pi) % (2 * np.pi)) - np.pi


class Pendulum(Environment):
    """Torque-limited pendulum swing-up.

    The state is the observation ``(cos th, sin th, th_dot)`` with ``th = 0``
    pointing upright; ``th = pi`` is hanging down. Both are equilibria under
    zero torque.
    """

    name = "pendulum"
    g = 10.0
    m = 1.0
    l = 1.0
    dt = 0.05
    max_speed = 8.0
    max_torque = 2.0

    def __init__(self, horizon: int = 200):
        worst = np.pi**2 + 0.1 * self.max_speed**2 + 0.001 * self.max_torque**2
        self.spec = EnvSpec(
            3, Continuous(1, (-self.max_torque,), (self.max_torque,)), horizon, (-worst, 0.0)
        )

    def reset_batch(self, rng, n):
        th = rng.uniform(-np.pi, np.pi, size=n)
        thdot = rng.uniform(-1.0, 1.0, size=n)
        return np.stack([np.cos(th), np.sin(th), thdot], axis=1)

    def _step_batch(self, states, actions, rng):
        th = np.arctan2(states[:, 1], states[:, 0])
        thdot = states[:, 2]
        u = np.clip(actions[:, 0], -self.max_torque, self.max_torque)
        cost = angle_normalize(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        newthdot = thdot + (3 * self.g / (2 * self.l) * np.sin(th) + 3.0 / (self.m * self.l**2) * u) * self.dt
        newthdot = np.clip(newthdot, -self.max_speed, self.max_speed)
        newth = th + newthdot * self.dt
        nxt = np.stack([np.cos(newth), np.sin(newth), newthdot], axis=1)
        return nxt, -cost, np.zeros(len(states), dtype=bool)


def _categorical_rows(probs, rng):
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    idx = (u[:, None] >= cdf / cdf[:, -1:]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


class ChainMDP(Environment):
    """A :class:`TabularMDP` as an environment; states are one-hot vectors."""

    name = "chain"

    def __init__(self, mdp: Optional[TabularMDP] = None):
        self.mdp = mdp if mdp is not None else random_chain_mdp()
        r = self.mdp.reward
        self.spec = EnvSpec(
            self.mdp.n_states, Discrete(self.mdp.n_actions), self.mdp.H, (float(r.min()), float(r.max()))
        )

    def one_hot(self, idx):
        return np.eye(self.mdp.n_states)[np.asarray(idx, dtype=np.intp)]

    def reset_batch(self, rng, n):
        idx = _categorical_rows(np.broadcast_to(self.mdp.mu, (n, self.mdp.n_states)), rng)
        return self.one_hot(idx)

    def _step_batch(self, states, actions, rng):
        s = states.argmax(axis=1)
        nxt = _categorical_rows(self.mdp.transition[s, actions], rng)
        return self.one_hot(nxt), self.mdp.reward[s, actions], np.zeros(len(states), dtype=bool)


ENVIRONMENTS = {"cartpole": CartPole, "pendulum": Pendulum, "chain": ChainMDP}


def make_env(name: str, **kwargs) -> Environment:
    try:
        return ENVIRONMENTS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None


def env_actions(env: Environment, arch: pol.PolicyArch, actions: np.ndarray) -> np.ndarray:
    """Map native policy actions to the environment's action space."""
    space = env.spec.action_space
    if isinstance(space, Discrete):
        return actions
    low, high = np.asarray(space.low), np.asarray(space.high)
    a = pol.squash(actions)
    return np.clip(low + 0.5 * (a + 1.0) * (high - low), low, high)


def rollout_batch(env, arch, params, H: int, n: int, rng: np.random.Generator) -> List[Trajectory]:
    """Sample ``n`` episodes of at most ``H`` steps, stepping them in lockstep."""
    sdim = env.spec.state_dim
    if H <= 0 or n <= 0:
        empty_a = np.zeros(0, dtype=np.intp) if arch.discrete else np.zeros((0, arch.head.dim))
        return [Trajectory(np.zeros((0, sdim)), empty_a, np.zeros(0), np.zeros(0)) for _ in range(n)]
    states = env.reset_batch(rng, n)
    alive = np.arange(n)
    rec_idx, rec_s, rec_a, rec_r = [], [], [], []
    for _ in range(H):
        s = states[alive]
        a = pol.sample_actions(arch, params, s, rng)
        nxt, r, done = env.step_batch(s, env_actions(env, arch, a), rng)
        rec_idx.append(alive)
        rec_s.append(s)
        rec_a.append(a)
        rec_r.append(r)
        states[alive] = nxt
        alive = alive[~done]
        if alive.size == 0:
            break
    idx = np.concatenate(rec_idx)
    S = np.concatenate(rec_s)
    A = np.concatenate(rec_a)
    R = np.concatenate(rec_r)
    order = np.argsort(idx, kind="stable")
    S, A, R, idx = S[order], A[order], R[order], idx[order]
    logp = pol.log_probs(arch, params, S, A)
    bounds = np.searchsorted(idx, np.arange(n + 1))
    return [
        Trajectory(S[lo:hi], A[lo:hi], R[lo:hi], logp[lo:hi])
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]


def rollout(env, arch, params, H: int, rng: np.random.Generator) -> Trajectory:
    return rollout_batch(env, arch, params, H, 1, rng)[0]
