"""Two-layer MLP policies over flat parameter vectors.

Flat parameter layout, in order (all row-major)::

    W1       (input_dim, hidden_units)
    b1       (hidden_units,)
    W2       (hidden_units, out_dim)
    b2       (out_dim,)
    log_std  (dim,)                      TanhGaussian head only

``out_dim`` is ``n`` for a :class:`Categorical` head (the logits) and ``dim``
for a :class:`TanhGaussian` head (the pre-squash mean). The Gaussian
log-std is a state-independent parameter, clamped to ``[-5, 2]``.

Actions of a TanhGaussian policy are represented by their *pre-squash*
value ``u``; the bounded action is ``tanh(u)``. ``log_prob`` returns the
log-density of the squashed action ``tanh(u)``, i.e. it includes the
change-of-variables term. Storing ``u`` keeps log-probabilities exact when
``tanh`` saturates in floating point.

Gradients are hand-written reverse mode on this fixed topology.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, InvalidArchitecture, NonFiniteOutput

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_LOG2 = np.log(2.0)


@dataclass(frozen=True)
class Categorical:
    n: int


@dataclass(frozen=True)
class TanhGaussian:
    dim: int


@dataclass(frozen=True)
class PolicyArch:
    input_dim: int
    hidden_units: int
    head: Union[Categorical, TanhGaussian]
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise InvalidArchitecture("input_dim must be positive")
        if self.hidden_units < 1:
            raise InvalidArchitecture("hidden_units must be positive")
        if self.activation != "relu":
            raise InvalidArchitecture(f"unsupported activation {self.activation!r}")
        if isinstance(self.head, Categorical):
            if self.head.n < 2:
                raise InvalidArchitecture("Categorical head needs n >= 2")
        elif isinstance(self.head, TanhGaussian):
            if self.head.dim < 1:
                raise InvalidArchitecture("TanhGaussian head needs dim >= 1")
        else:
            raise InvalidArchitecture(f"unknown head {self.head!r}")

    @property
    def discrete(self) -> bool:
        return isinstance(self.head, Categorical)

    @property
    def out_dim(self) -> int:
        return self.head.n if self.discrete else self.head.dim


def param_count(arch: PolicyArch) -> int:
    i, h, o = arch.input_dim, arch.hidden_units, arch.out_dim
    d = i * h + h + h * o + o
    if not arch.discrete:
        d += arch.head.dim
    return d


def _slices(arch):
    i, h, o = arch.input_dim, arch.hidden_units, arch.out_dim
    sizes = [i * h, h, h * o, o]
    if not arch.discrete:
        sizes.append(arch.head.dim)
    ends = np.cumsum(sizes)
    starts = ends - sizes
    return [slice(s, e) for s, e in zip(starts, ends)]


def unpack(arch: PolicyArch, params: np.ndarray):
    """Views ``(W1, b1, W2, b2, log_std)`` into ``params``; ``log_std`` is None when discrete."""
    params = np.asarray(params, dtype=float)
    if params.shape != (param_count(arch),):
        raise DimensionMismatch(f"expected {param_count(arch)} parameters, got shape {params.shape}")
    sl = _slices(arch)
    i, h, o = arch.input_dim, arch.hidden_units, arch.out_dim
    W1 = params[sl[0]].reshape(i, h)
    b1 = params[sl[1]]
    W2 = params[sl[2]].reshape(h, o)
    b2 = params[sl[3]]
    log_std = None if arch.discrete else params[sl[4]]
    return W1, b1, W2, b2, log_std


def init_params(arch: PolicyArch, rng: np.random.Generator, log_std: float = 0.0) -> np.ndarray:
    """Fan-in scaled uniform weights, zero biases, constant initial log-std."""
    params = np.zeros(param_count(arch))
    sl = _slices(arch)
    i, h, o = arch.input_dim, arch.hidden_units, arch.out_dim
    params[sl[0]] = rng.uniform(-1.0, 1.0, size=i * h) / np.sqrt(i)
    params[sl[2]] = rng.uniform(-1.0, 1.0, size=h * o) / np.sqrt(h)
    if not arch.discrete:
        params[sl[4]] = log_std
    return params


def squash(u):
    return np.tanh(u)


def _log1m_tanh_sq(u):
    # log(1 - tanh(u)^2), stable for large |u|
    return 2.0 * (_LOG2 - u - np.logaddexp(0.0, -2.0 * u))


class _Evaluation:
    """Forward pass over a batch of (state, action) pairs, kept for the backward pass."""

    def __init__(self, arch, params, states, actions):
        self.arch = arch
        W1, b1, W2, b2, log_std = unpack(arch, params)
        self.W2 = W2
        states = np.asarray(states, dtype=float)
        if states.ndim != 2 or states.shape[1] != arch.input_dim:
            raise DimensionMismatch(f"states must have shape (B, {arch.input_dim}), got {states.shape}")
        self.states = states
        with np.errstate(invalid="ignore", over="ignore"):
            pre = states @ W1 + b1
            self.active = pre > 0.0
            self.hidden = np.where(self.active, pre, 0.0)
            out = self.hidden @ W2 + b2
        # a NaN pre-activation is masked by the ReLU, so check both layers
        if not (np.all(np.isfinite(pre)) and np.all(np.isfinite(out))):
            raise NonFiniteOutput("policy forward pass produced non-finite outputs")
        if arch.discrete:
            actions = np.asarray(actions).astype(np.intp).reshape(-1)
            if actions.shape[0] != states.shape[0]:
                raise DimensionMismatch("one action per state required")
            lse = np.logaddexp.reduce(out, axis=1) if out.shape[1] > 2 else np.logaddexp(out[:, 0], out[:, 1])
            rows = np.arange(out.shape[0])
            self.logp = out[rows, actions] - lse
            probs = np.exp(out - lse[:, None])
            dout = -probs
            dout[rows, actions] += 1.0
            self.dout = dout
        else:
            dim = arch.head.dim
            actions = np.asarray(actions, dtype=float).reshape(-1, dim)
            if actions.shape[0] != states.shape[0]:
                raise DimensionMismatch("one action per state required")
            ls = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
            inv_std = np.exp(-ls)
            with np.errstate(over="ignore", invalid="ignore"):
                z = (actions - out) * inv_std
                logp = -0.5 * z * z - ls - _HALF_LOG_2PI - _log1m_tanh_sq(actions)
                self.dout = z * inv_std
                ls_mask = (log_std > LOG_STD_MIN) & (log_std < LOG_STD_MAX)
                self.dlog_std = (z * z - 1.0) * ls_mask
            self.logp = logp.sum(axis=1)
        if not np.all(np.isfinite(self.logp)):
            raise NonFiniteOutput("non-finite log-probability")

    def vjp(self, coef: np.ndarray) -> np.ndarray:
        """``sum_b coef[b] * grad log pi(a_b | s_b)`` as a flat parameter vector."""
        coef = np.asarray(coef, dtype=float)
        dout = self.dout * coef[:, None]
        dpre = (dout @ self.W2.T) * self.active
        parts = [
            (self.states.T @ dpre).ravel(),
            dpre.sum(axis=0),
            (self.hidden.T @ dout).ravel(),
            dout.sum(axis=0),
        ]
        if not self.arch.discrete:
            parts.append(coef @ self.dlog_std)
        g = np.concatenate(parts)
        if not np.all(np.isfinite(g)):
            raise NonFiniteOutput("non-finite gradient")
        return g

    def jacobian(self) -> np.ndarray:
        """Per-sample gradients, shape (B, d)."""
        dout = self.dout
        dpre = (dout @ self.W2.T) * self.active
        B = dout.shape[0]
        parts = [
            np.einsum("bi,bh->bih", self.states, dpre).reshape(B, -1),
            dpre,
            np.einsum("bh,bo->bho", self.hidden, dout).reshape(B, -1),
            dout,
        ]
        if not self.arch.discrete:
            parts.append(self.dlog_std)
        return np.concatenate(parts, axis=1)


def evaluate(arch: PolicyArch, params, states, actions) -> _Evaluation:
    return _Evaluation(arch, params, states, actions)


def log_probs(arch, params, states, actions) -> np.ndarray:
    return _Evaluation(arch, params, states, actions).logp


def log_prob(arch, params, state, action) -> float:
    state = np.asarray(state, dtype=float).reshape(1, -1)
    return float(_Evaluation(arch, params, state, [action]).logp[0])


def grad_log_prob(arch, params, state, action) -> np.ndarray:
    state = np.asarray(state, dtype=float).reshape(1, -1)
    return _Evaluation(arch, params, state, [action]).vjp(np.ones(1))


def grad_log_probs(arch, params, states, actions) -> np.ndarray:
    return _Evaluation(arch, params, states, actions).jacobian()


def action_distribution(arch, params, states):
    """Categorical probabilities ``(B, n)`` or Gaussian ``(mean (B, dim), std (dim,))``."""
    W1, b1, W2, b2, log_std = unpack(arch, params)
    states = np.asarray(states, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        pre = states @ W1 + b1
        out = np.maximum(pre, 0.0) @ W2 + b2
    if not (np.all(np.isfinite(pre)) and np.all(np.isfinite(out))):
        raise NonFiniteOutput("policy forward pass produced non-finite outputs")
    if arch.discrete:
        z = out - out.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)
    return out, np.exp(np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX))


def sample_actions(arch, params, states, rng: np.random.Generator) -> np.ndarray:
    """One action per row of ``states``; integers for Categorical, pre-squash reals otherwise."""
    states = np.asarray(states, dtype=float)
    if arch.discrete:
        p = action_distribution(arch, params, states)
        cdf = np.cumsum(p, axis=1)
        u = rng.random(states.shape[0])
        a = (u[:, None] >= cdf / cdf[:, -1:]).sum(axis=1)
        return np.minimum(a, arch.head.n - 1)
    mean, std = action_distribution(arch, params, states)
    return mean + std * rng.standard_normal(mean.shape)


def sample_action(arch, params, state, rng):
    """Draw one action and return it with its log-probability."""
    state = np.asarray(state, dtype=float).reshape(1, -1)
    a = sample_actions(arch, params, state, rng)[0]
    return a, log_prob(arch, params, state[0], a)


def traj_log_prob(arch, params, traj) -> float:
    if traj.length == 0:
        return 0.0
    return float(log_probs(arch, params, traj.states, traj.actions).sum())
