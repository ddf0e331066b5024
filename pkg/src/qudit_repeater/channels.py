"""Physical channel models: fiber loss, memory decay, depolarization.

Also builds the worst-case Pauli approximation of the pure-loss channel acting
on Fock-encoded qudits, where losing ``r`` photons is an ``X^(-r)`` error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidRegime, OddLinkCount

__all__ = [
    "PhysicalParams",
    "Topology",
    "FockLossApprox",
    "link_transmissivity",
    "link_loss",
    "storage_error_rate",
    "fock_loss_probability",
    "build_fock_approx",
    "rounded_loss_argmax",
    "depolarizing_offdiagonal",
    "depolarizing_trivial",
]

_LN10_OVER_10 = math.log(10.0) / 10.0


@dataclass(frozen=True)
class PhysicalParams:
    """Device and fiber parameters.

    Attributes
    ----------
    alpha : float
        Fiber attenuation in dB/km.
    f_M : float
        Depolarizing rate before each measurement.
    f_G : float
        Depolarizing rate after each gate (applied to both qudits).
    gamma : float
        Memory decay rate in dB/ms.
    c : float
        Signal speed in fiber, km/ms.
    """

    alpha: float = 0.2
    f_M: float = 1e-2
    f_G: float = 1e-3
    gamma: float = 1e-2
    c: float = 200.0

    def __post_init__(self):
        if not (self.alpha >= 0 and self.gamma >= 0):
            raise ConfigError("alpha and gamma must be non-negative")
        if not self.c > 0:
            raise ConfigError("signal speed c must be positive")
        for name in ("f_M", "f_G"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{name}={v} must lie in [0, 1]")

    def replace(self, **changes) -> "PhysicalParams":
        return PhysicalParams(**{**self.__dict__, **changes})

    @classmethod
    def noiseless(cls) -> "PhysicalParams":
        """All loss and operational error rates set to zero."""
        return cls(alpha=0.0, f_M=0.0, f_G=0.0, gamma=0.0)


@dataclass(frozen=True)
class Topology:
    """A repeater line of total length ``L`` km split into ``N`` elementary links."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L >= 0:
            raise ConfigError(f"total distance L={self.L} must be non-negative")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"link count N={self.N} must be an integer >= 2")
        if self.N % 2:
            raise OddLinkCount(f"link count N={self.N} must be even")
        object.__setattr__(self, "N", int(self.N))

    @property
    def L0(self) -> float:
        return self.L / self.N

    @classmethod
    def from_spacing(cls, L: float, L0: float) -> "Topology":
        """Closest even link count for a target spacing ``L0`` (at least 2)."""
        if not L0 > 0:
            raise ConfigError("spacing L0 must be positive")
        half = max(1, round(L / L0 / 2))
        return cls(L, 2 * half)


def link_transmissivity(alpha: float, L0: float) -> float:
    """Transmissivity ``10^(-alpha L0 / 10)`` of a fiber segment."""
    if alpha < 0 or L0 < 0:
        raise ConfigError("attenuation and length must be non-negative")
    return 10.0 ** (-alpha * L0 / 10.0)


def link_loss(alpha: float, L0: float) -> float:
    """``1 - link_transmissivity(alpha, L0)`` without cancellation for short links."""
    if alpha < 0 or L0 < 0:
        raise ConfigError("attenuation and length must be non-negative")
    return -math.expm1(-alpha * L0 * _LN10_OVER_10)


def storage_error_rate(gamma: float, L: float, c: float) -> float:
    """Depolarizing rate of a memory waiting ``L / c`` ms at decay rate ``gamma``."""
    if gamma < 0 or L < 0 or not c > 0:
        raise ConfigError("need gamma >= 0, L >= 0 and c > 0")
    return -math.expm1(-gamma * (L / c) * _LN10_OVER_10)


def _log_binom(k: int, r: int) -> float:
    return math.lgamma(k + 1) - math.lgamma(r + 1) - math.lgamma(k - r + 1)


def _loss_prob(k: int, r: int, eta0: float, loss: float) -> float:
    # loss = 1 - eta0, passed separately to keep precision near eta0 = 1
    if r > k or r < 0:
        return 0.0
    if r == 0:
        return eta0**k
    if loss == 0.0:
        return 0.0
    if eta0 == 0.0:
        return 1.0 if r == k else 0.0
    log_eta = math.log1p(-loss) if loss < 0.5 else math.log(eta0)
    return math.exp(_log_binom(k, r) + (k - r) * log_eta + r * math.log(loss))


def fock_loss_probability(k: int, r: int, eta0: float) -> float:
    """Probability that a ``k``-photon Fock state loses exactly ``r`` photons."""
    if not 0 <= eta0 <= 1:
        raise ConfigError(f"transmissivity {eta0} outside [0, 1]")
    return _loss_prob(k, r, eta0, 1.0 - eta0)


def rounded_loss_argmax(r: int, eta0: float, D: int) -> int:
    """Photon number ``min(rd(r / (1 - eta0)), D - 1)`` from the large-k stationarity
    condition. Ties round upward. Used only to cross-check the exact maximization.
    """
    if eta0 >= 1:
        return D - 1
    x = r / (1.0 - eta0)
    return int(min(math.floor(x + 0.5), D - 1))


@dataclass(frozen=True)
class FockLossApprox:
    """Worst-case Pauli channel replacing pure loss on a ``D``-level Fock qudit.

    ``p_appr[r]`` is the probability of the error ``X^(-r)``.
    """

    D: int
    eta0: float
    p_appr: np.ndarray = field(repr=False)
    argmax_k: tuple = field(repr=False, default=())

    def as_exponent_distribution(self) -> np.ndarray:
        """Distribution over the exponent ``e`` of ``X^e`` (``e = -r mod D``)."""
        out = np.empty(self.D)
        out[0] = self.p_appr[0]
        out[1:] = self.p_appr[1:][::-1]
        return out


def build_fock_approx(D: int, eta0: float, loss: float | None = None) -> FockLossApprox:
    """Maximize the ``r``-photon loss probability over input photon numbers.

    ``loss`` may be given as ``1 - eta0`` computed elsewhere without rounding.
    Raises :class:`InvalidRegime` if the resulting no-loss probability is
    negative.
    """
    if D < 2:
        raise ConfigError("dimension must be at least 2")
    if not 0 <= eta0 <= 1:
        raise ConfigError(f"transmissivity {eta0} outside [0, 1]")
    if loss is None:
        loss = 1.0 - eta0
    p = np.zeros(D)
    ks = [0] * D
    for r in range(1, D):
        best, best_k = -1.0, r
        for k in range(r, D):
            v = _loss_prob(k, r, eta0, loss)
            if v > best:
                best, best_k = v, k
        p[r] = best
        ks[r] = best_k
    tail = math.fsum(p[1:])
    p[0] = 1.0 - tail
    if p[0] < 0:
        raise InvalidRegime(
            f"Pauli approximation invalid for D={D}, eta0={eta0:.6g}: "
            f"no-loss probability {p[0]:.3g} < 0; reduce the link spacing"
        )
    p.setflags(write=False)
    return FockLossApprox(D=D, eta0=eta0, p_appr=p, argmax_k=tuple(ks))


def depolarizing_offdiagonal(D: int, f: float) -> float:
    """Probability ``f / D^2`` of each nontrivial Pauli under depolarizing rate ``f``."""
    if D < 2 or not 0 <= f <= 1:
        raise ConfigError("need D >= 2 and f in [0, 1]")
    return f / D**2


def depolarizing_trivial(D: int, f: float) -> float:
    return 1.0 - f + depolarizing_offdiagonal(D, f)
