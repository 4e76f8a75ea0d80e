"""Exact quantities on small tabular MDPs by enumerating every trajectory.

The enumeration keeps every action sequence (policies have full support)
and every state transition of nonzero probability, so the support of
``p(tau|theta)`` is listed exactly once. Policies see states as one-hot
vectors, as in :class:`mfpo.envs.ChainMDP`.
"""

import numpy as np

from . import policy as pol
from .envs import Trajectory
from .errors import EnumerationTooLarge
from .estimators import EstimatorConfig, TrajectoryBatch
from .mdp import TabularMDP, random_chain_mdp  # noqa: F401  (re-exported)

MAX_TRAJECTORIES = 10**6


def support_size(mdp: TabularMDP) -> int:
    """Number of trajectories with nonzero probability under a full-support policy."""
    reach = (mdp.transition > 0).astype(object)  # python ints, no overflow
    count = np.full(mdp.n_states, mdp.n_actions, dtype=object)
    for _ in range(mdp.H - 1):
        count = (reach @ count).sum(axis=1)
    return int(count[mdp.mu > 0].sum())


class Enumeration:
    """All trajectories of ``mdp`` with their state/action index paths.

    ``paths_s``/``paths_a`` have shape ``(M, H)``; ``log_base`` holds the
    policy-independent part ``log mu(s_1) + sum log T(s_{h+1}|s_h, a_h)``.
    """

    def __init__(self, mdp: TabularMDP, cap: int = MAX_TRAJECTORIES):
        size = support_size(mdp)
        if size > cap:
            raise EnumerationTooLarge(f"{size} trajectories exceed the enumeration cap {cap}")
        S, A, H = mdp.n_states, mdp.n_actions, mdp.H
        frontier = [((s,), (), np.log(mdp.mu[s])) for s in np.flatnonzero(mdp.mu > 0)]
        for h in range(H):
            nxt = []
            for ss, aa, lb in frontier:
                s = ss[-1]
                for a in range(A):
                    if h == H - 1:
                        nxt.append((ss, aa + (a,), lb))
                        continue
                    for s2 in np.flatnonzero(mdp.transition[s, a] > 0):
                        nxt.append((ss + (int(s2),), aa + (a,), lb + np.log(mdp.transition[s, a, s2])))
            frontier = nxt
        paths = frontier
        self.mdp = mdp
        self.paths_s = np.array([p[0] for p in paths], dtype=np.intp).reshape(len(paths), H)
        self.paths_a = np.array([p[1] for p in paths], dtype=np.intp).reshape(len(paths), H)
        self.log_base = np.array([p[2] for p in paths])
        self.rewards = mdp.reward[self.paths_s, self.paths_a]
        eye = np.eye(S)
        self.trajectories = [
            Trajectory(eye[s], a, r, np.zeros(H))
            for s, a, r in zip(self.paths_s, self.paths_a, self.rewards)
        ]
        self.flat_states = eye[self.paths_s.ravel()]
        self.flat_actions = self.paths_a.ravel()

    def __len__(self):
        return len(self.trajectories)

    def log_probs(self, arch, params) -> np.ndarray:
        """``log p(tau|params)`` for every enumerated trajectory."""
        step = pol.log_probs(arch, params, self.flat_states, self.flat_actions)
        return self.log_base + step.reshape(len(self), self.mdp.H).sum(axis=1)

    def probs(self, arch, params) -> np.ndarray:
        return np.exp(self.log_probs(arch, params))

    def returns(self, gamma=None) -> np.ndarray:
        gamma = self.mdp.gamma if gamma is None else gamma
        return self.rewards @ (gamma ** np.arange(self.mdp.H))


def _enum(mdp, cap=MAX_TRAJECTORIES):
    return mdp if isinstance(mdp, Enumeration) else Enumeration(mdp, cap)


def enumerate_trajectories(mdp, arch, params, cap: int = MAX_TRAJECTORIES):
    """List of ``(Trajectory, probability)`` pairs covering the whole support.

    Each trajectory's ``behavior_logps`` holds the per-step ``log pi`` under ``params``.
    """
    en = _enum(mdp, cap)
    step = pol.log_probs(arch, params, en.flat_states, en.flat_actions).reshape(len(en), en.mdp.H)
    p = np.exp(en.log_base + step.sum(axis=1))
    out = []
    for traj, lp, prob in zip(en.trajectories, step, p):
        out.append((Trajectory(traj.states, traj.actions, traj.rewards, lp), float(prob)))
    return out


def exact_J(mdp, arch, params) -> float:
    """``-E[r(tau)]``."""
    en = _enum(mdp)
    return float(-(en.probs(arch, params) @ en.returns()))


def exact_grad_J(mdp, arch, params) -> np.ndarray:
    """``-E[(sum_h grad log pi(a_h|s_h)) r(tau)]`` summed exactly over the support."""
    en = _enum(mdp)
    ev = pol.evaluate(arch, params, en.flat_states, en.flat_actions)
    p = np.exp(en.log_base + ev.logp.reshape(len(en), en.mdp.H).sum(axis=1))
    coef = -np.repeat(p * en.returns(), en.mdp.H)
    return ev.vjp(coef)


def exact_estimator_mean(mdp, arch, params_sample, params_eval, cfg: EstimatorConfig,
                         weighted: bool = True, baseline=0.0) -> np.ndarray:
    """``E_{tau ~ p(.|params_sample)}[w * g(params_eval; tau)]``, with ``w = 1`` when unweighted.

    ``w = p(tau|params_eval) / p(tau|params_sample)``; the discount used by
    the estimator is ``cfg.gamma``.
    """
    en = _enum(mdp)
    batch = TrajectoryBatch(en.trajectories, cfg, baseline)
    ev_s = batch.evaluate(arch, params_sample)
    ev_e = ev_s if params_eval is params_sample else batch.evaluate(arch, params_eval)
    p = np.exp(en.log_base + batch.per_traj(ev_s.logp))
    if weighted:
        p = p * batch.weights(ev_s, ev_e)
    return ev_e.vjp(batch.coef * p[batch.traj_idx])


def estimator_variance(mdp, arch, params, cfg: EstimatorConfig, baseline=0.0) -> float:
    """Exact ``E||g - E g||^2`` of a single-trajectory estimator (used for sanity checks)."""
    en = _enum(mdp)
    batch = TrajectoryBatch(en.trajectories, cfg, baseline)
    ev = batch.evaluate(arch, params)
    p = np.exp(en.log_base + batch.per_traj(ev.logp))
    jac = ev.jacobian() * batch.coef[:, None]
    G = np.zeros((len(en), jac.shape[1]))
    np.add.at(G, batch.traj_idx, jac)
    mean = p @ G
    return float(p @ ((G - mean) ** 2).sum(axis=1))


def grad_norm_sq(mdp, arch, params) -> float:
    g = exact_grad_J(mdp, arch, params)
    return float(g @ g)
