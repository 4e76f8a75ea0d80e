"""Stepsize and momentum schedules.

``TheorySchedule`` follows the convergence analysis::

    alpha_t   = c_alpha / (c_t + sigma_g^2 t)^(1/3)
    nu_{t+1}  = 1 - c_nu alpha_t^2
    c_t       = max{c_nu^3 c_alpha^3 / (2^12 K^3 L^3),
                    2^12 K^3 D^2 N^2 sigma_g^2 - sigma_g^2 t,
                    2 sigma_g^2}
    c_nu      = L^2 / (24 K (DN)^2) + 64 L^2 / (DN)
    c_alpha   = (DN sigma_g)^(2/3) / L

with ``L`` the smoothness estimate ``L_tilde``. ``PracticalSchedule`` is the
geometric decay ``alpha_t = alpha0 * decay^t`` with ``nu = 1 - coeff * alpha``.
"""

from dataclasses import dataclass
from typing import Optional

from .errors import InvalidSchedule


@dataclass(frozen=True)
class TheorySchedule:
    K: int
    D: int
    N: int
    sigma_g: float = 1.0
    L_tilde: float = 1.0
    c_alpha: Optional[float] = None
    c_nu: Optional[float] = None

    def __post_init__(self):
        for name in ("K", "D", "N", "sigma_g", "L_tilde"):
            if not getattr(self, name) > 0:
                raise InvalidSchedule(f"{name} must be positive")
        DN = self.D * self.N
        if self.c_alpha is None:
            object.__setattr__(self, "c_alpha", (DN * self.sigma_g) ** (2.0 / 3.0) / self.L_tilde)
        if self.c_nu is None:
            L2 = self.L_tilde**2
            object.__setattr__(self, "c_nu", L2 / (24 * self.K * DN**2) + 64 * L2 / DN)
        if not self.c_alpha > 0:
            raise InvalidSchedule("c_alpha must be positive")
        if not self.c_nu >= 0:
            raise InvalidSchedule("c_nu must be nonnegative")
        # alpha_t is nonincreasing, so the bound at t = 0 covers every step
        if self.alpha(0) > self.max_alpha * (1.0 + 1e-12):
            raise InvalidSchedule(
                f"alpha_0 = {self.alpha(0):.3g} exceeds 1/(16 L K) = {self.max_alpha:.3g}"
            )

    @property
    def max_alpha(self) -> float:
        return 1.0 / (16.0 * self.L_tilde * self.K)

    def c_t(self, t: int) -> float:
        s2 = self.sigma_g**2
        K, D, N, L = self.K, self.D, self.N, self.L_tilde
        return max(
            self.c_nu**3 * self.c_alpha**3 / (2**12 * K**3 * L**3),
            2**12 * K**3 * D**2 * N**2 * s2 - s2 * t,
            2 * s2,
        )

    def alpha(self, t: int) -> float:
        if t < 0:
            raise InvalidSchedule("step index must be nonnegative")
        return self.c_alpha / (self.c_t(t) + self.sigma_g**2 * t) ** (1.0 / 3.0)

    def nu(self, alpha_prev: float) -> float:
        return min(1.0, max(0.0, 1.0 - self.c_nu * alpha_prev**2))


@dataclass(frozen=True)
class PracticalSchedule:
    alpha0: float = 1e-4
    decay: float = 0.99
    momentum_coeff: float = 3.0
    fixed_momentum: Optional[float] = None  # overrides nu_t when set, e.g. 0.0 disables momentum

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise InvalidSchedule("alpha0 must be positive")
        if not 0.0 < self.decay <= 1.0:
            raise InvalidSchedule("decay must lie in (0, 1]")
        if not self.momentum_coeff > 0:
            raise InvalidSchedule("momentum_coeff must be positive")
        if self.fixed_momentum is not None and not 0.0 <= self.fixed_momentum <= 1.0:
            raise InvalidSchedule("fixed_momentum must lie in [0, 1]")

    def alpha(self, t: int) -> float:
        if t < 0:
            raise InvalidSchedule("step index must be nonnegative")
        return self.alpha0 * self.decay**t

    def nu(self, alpha_prev: float) -> float:
        if self.fixed_momentum is not None:
            return self.fixed_momentum
        return min(1.0, max(0.0, 1.0 - self.momentum_coeff * alpha_prev))


def stepsize(t: int, sched) -> float:
    return sched.alpha(t)


def momentum(t: int, sched, alpha_prev: float) -> float:
    """``nu_t`` from the stepsize of the previous step; always within [0, 1]."""
    return sched.nu(alpha_prev)
