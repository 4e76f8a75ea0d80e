"""Finite-horizon tabular MDPs."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """A finite MDP with horizon ``H``.

    ``transition[s, a, s']`` is the probability of moving to ``s'``,
    ``reward[s, a]`` the deterministic reward and ``mu`` the initial
    state distribution.
    """

    transition: np.ndarray
    reward: np.ndarray
    mu: np.ndarray
    gamma: float
    H: int

    def __post_init__(self):
        T = np.asarray(self.transition, dtype=float)
        r = np.asarray(self.reward, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "mu", mu)
        if T.ndim != 3 or T.shape[0] != T.shape[2]:
            raise ValueError("transition must have shape (S, A, S)")
        S, A, _ = T.shape
        if r.shape != (S, A):
            raise ValueError(f"reward must have shape {(S, A)}, got {r.shape}")
        if mu.shape != (S,):
            raise ValueError(f"mu must have shape {(S,)}, got {mu.shape}")
        if np.any(T < 0) or np.max(np.abs(T.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("transition rows must be probability vectors")
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError("mu must be a probability vector")
        if not np.all(np.isfinite(r)):
            raise ValueError("rewards must be finite")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if int(self.H) < 1:
            raise ValueError("H must be positive")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]


def random_chain_mdp(n_states=3, n_actions=2, H=3, gamma=0.99, seed=0, mu=None) -> TabularMDP:
    """Seed-fixed random MDP used as the default ``chain`` environment.

    Transition rows are Dirichlet(1) draws, rewards uniform on [0, 1] and the
    episode always starts in state 0 unless ``mu`` is given.
    """
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    # renormalize so rows sum to one to the last bit
    T = T / T.sum(axis=2, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    if mu is None:
        mu = np.zeros(n_states)
        mu[0] = 1.0
    return TabularMDP(T, r, mu, gamma, H)
