"""Error statistics of the one-way repeater line and the resulting capacity bounds.

The pipeline is

    station error distributions -> block success probabilities
        -> final X/Z error distribution on Bob's qudit -> entropy
        -> capacity lower bound, repeaterless upper bound, gain.

Probabilities close to one are carried together with their complements so
that long chains (``N`` up to millions of links) do not lose precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channels import (
    PhysicalParams,
    Topology,
    build_fock_approx,
    link_loss,
    link_transmissivity,
    storage_error_rate,
)
from .errors import ConfigError, NoCrossing, OddLinkCount
from .qecc import CodeParams

__all__ = [
    "Encoding",
    "SingleQuditErrorDist",
    "StationDistributions",
    "SuccessProbs",
    "FinalErrorDistribution",
    "GainReport",
    "PseudothresholdResult",
    "station_distributions",
    "block_success_uniform",
    "block_success_general",
    "block_failure",
    "success_probs",
    "final_distribution",
    "entropy",
    "marginal_entropy",
    "plob_bound",
    "capacity_bounds",
    "evaluate",
    "pseudothreshold",
]

_LN2 = math.log(2.0)


class Encoding(str, enum.Enum):
    """Photonic encoding of a physical qudit."""

    MULTIMODE = "mm"
    FOCK = "fock"

    def modes(self, code: CodeParams) -> int:
        """Photonic modes per logical qudit."""
        return code.n * code.D if self is Encoding.MULTIMODE else code.n

    @classmethod
    def parse(cls, value) -> "Encoding":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        if v in ("mm", "multimode"):
            return cls.MULTIMODE
        if v == "fock":
            return cls.FOCK
        raise ConfigError(f"unknown encoding {value!r}")


def _one_minus_survival(*factors: tuple[float, int]) -> float:
    """``1 - prod (1 - rate)**power`` evaluated without cancellation."""
    s = 0.0
    for rate, power in factors:
        if rate >= 1.0:
            return 1.0
        s += power * math.log1p(-rate)
    return -math.expm1(s)


@dataclass(frozen=True)
class SingleQuditErrorDist:
    """Distribution of one physical qudit's error exponent in Z/DZ.

    ``tail`` is the total probability of a nontrivial error, kept separately
    from ``p[0]`` so it stays exact when it is tiny.
    """

    p: np.ndarray
    tail: float

    @property
    def D(self) -> int:
        return len(self.p)

    @property
    def flat(self) -> bool:
        nz = self.p[1:]
        return bool(np.all(nz == nz[0])) if len(nz) else True

    @classmethod
    def flat_tail(cls, D: int, p_nontrivial: float) -> "SingleQuditErrorDist":
        """All ``D - 1`` nontrivial exponents with probability ``p_nontrivial``."""
        if not 0 <= p_nontrivial <= 1.0 / (D - 1):
            raise ConfigError(f"nontrivial probability {p_nontrivial} out of range")
        p = np.full(D, p_nontrivial, dtype=float)
        tail = (D - 1) * p_nontrivial
        p[0] = 1.0 - tail
        p.setflags(write=False)
        return cls(p=p, tail=tail)

    @classmethod
    def from_probs(cls, probs) -> "SingleQuditErrorDist":
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or len(p) < 2 or np.any(p < 0):
            raise ConfigError("need a non-negative probability vector of length >= 2")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        return cls(p=p, tail=math.fsum(p[1:]))

    @classmethod
    def _mixed(cls, base: np.ndarray, base_tail: float, dep: float, D: int):
        # (1 - dep) * base + dep * uniform
        p = base * (1.0 - dep) + dep / D
        tail = base_tail * (1.0 - dep) + dep * (D - 1) / D
        p[0] = 1.0 - tail
        p.setflags(write=False)
        return cls(p=p, tail=tail)


@dataclass(frozen=True)
class StationDistributions:
    rep: SingleQuditErrorDist
    first_rep: SingleQuditErrorDist
    bob_x: SingleQuditErrorDist
    bob_z: SingleQuditErrorDist


def station_distributions(
    params: PhysicalParams, topo: Topology, code: CodeParams, enc: Encoding
) -> StationDistributions:
    """Single-qudit error distributions at intermediate stations, the first
    station, and Bob's X and Z correction rounds.

    Raises :class:`~qudit_repeater.errors.InvalidRegime` for Fock encoding when
    the link spacing is too large for the loss approximation.
    """
    enc = Encoding.parse(enc)
    D = code.D
    fT = link_loss(params.alpha, topo.L0)
    fS = storage_error_rate(params.gamma, topo.L, params.c)
    fG, fM = params.f_G, params.f_M

    def flat(total_err: float) -> SingleQuditErrorDist:
        return SingleQuditErrorDist.flat_tail(D, total_err / D)

    if enc is Encoding.MULTIMODE:
        return StationDistributions(
            rep=flat(_one_minus_survival((fT, 2), (fG, 3), (fM, 1))),
            first_rep=flat(_one_minus_survival((fT, 1), (fG, 2), (fM, 1))),
            bob_x=flat(_one_minus_survival((fG, 2), (fS, 1))),
            bob_z=flat(_one_minus_survival((fT, 1), (fG, 3), (fS, 1))),
        )

    eta0 = link_transmissivity(params.alpha, topo.L0)
    approx = build_fock_approx(D, eta0, loss=fT)
    loss_exp = np.array(approx.as_exponent_distribution())
    loss_tail = math.fsum(approx.p_appr[1:])
    rep_dep = _one_minus_survival((fG, 3), (fM, 1))
    bobz_dep = _one_minus_survival((fG, 3), (fS, 1))
    return StationDistributions(
        rep=SingleQuditErrorDist._mixed(loss_exp.copy(), loss_tail, rep_dep, D),
        first_rep=flat(_one_minus_survival((fG, 2), (fM, 1))),
        bob_x=flat(_one_minus_survival((fG, 2), (fS, 1))),
        bob_z=SingleQuditErrorDist._mixed(loss_exp.copy(), loss_tail, bobz_dep, D),
    )


def _binomial_split(p0: float, s: float, n: int, t: int) -> tuple[float, float]:
    """Return (P[weight <= t], P[weight > t]) for per-qudit error probability ``s``."""
    t = min(t, n)
    head = math.fsum(math.comb(n, k) * p0 ** (n - k) * s**k for k in range(t + 1))
    rest = math.fsum(math.comb(n, k) * p0 ** (n - k) * s**k for k in range(t + 1, n + 1))
    # p0 + s may exceed 1 by an ulp
    return min(head, 1.0), min(rest, 1.0)


def block_success_uniform(dist: SingleQuditErrorDist, code: CodeParams) -> float:
    """Probability that at most ``t`` of the ``n`` qudits carry an error (flat tail)."""
    if not dist.flat:
        raise ConfigError("block_success_uniform requires equal nontrivial probabilities")
    D, n, t = dist.D, code.n, code.t
    p0, pe = float(dist.p[0]), float(dist.p[1])
    return math.fsum(
        (D - 1) ** k * math.comb(n, k) * p0 ** (n - k) * pe**k for k in range(min(t, n) + 1)
    )


def block_success_general(dist: SingleQuditErrorDist, code: CodeParams) -> float:
    """Correctable-pattern probability for arbitrary nontrivial probabilities.

    The sum over nontrivial exponent tuples of length ``k`` factorizes into
    ``(sum_{r>=1} p_r)**k``, so only the total tail probability is needed.
    """
    return _binomial_split(float(dist.p[0]), dist.tail, code.n, code.t)[0]


def block_failure(dist: SingleQuditErrorDist, code: CodeParams) -> float:
    """``1 - block success`` as a direct sum over uncorrectable weights."""
    return _binomial_split(float(dist.p[0]), dist.tail, code.n, code.t)[1]


@dataclass(frozen=True)
class SuccessProbs:
    p_succ_first_rep: float
    p_succ_rep: float
    p_succ_bob_x: float
    p_succ_bob_z: float
    # complements, accurate when the success probabilities round to 1
    fail_first_rep: float = None
    fail_rep: float = None
    fail_bob_x: float = None
    fail_bob_z: float = None

    def __post_init__(self):
        for name in ("first_rep", "rep", "bob_x", "bob_z"):
            s = getattr(self, "p_succ_" + name)
            if not -1e-15 <= s <= 1 + 1e-15:
                raise ConfigError(f"success probability {name}={s} outside [0, 1]")
            if getattr(self, "fail_" + name) is None:
                object.__setattr__(self, "fail_" + name, max(0.0, 1.0 - s))

    @classmethod
    def uniform(cls, value: float) -> "SuccessProbs":
        return cls(value, value, value, value)


def success_probs(dists: StationDistributions, code: CodeParams) -> SuccessProbs:
    vals = {}
    for name in ("first_rep", "rep", "bob_x", "bob_z"):
        d = getattr(dists, name)
        head, rest = _binomial_split(float(d.p[0]), d.tail, code.n, code.t)
        vals["p_succ_" + name] = head
        vals["fail_" + name] = rest
    return SuccessProbs(**vals)


def _log_survival(fail: float) -> float:
    return -math.inf if fail >= 1.0 else math.log1p(-fail)


@dataclass(frozen=True)
class FinalErrorDistribution:
    """Product-form distribution of the X and Z error exponents on Bob's qudit.

    ``x_tail`` and ``z_tail`` are the (equal) probabilities of each nontrivial
    exponent.
    """

    D: int
    x_tail: float
    z_tail: float

    @property
    def p_x(self) -> np.ndarray:
        return self._marginal(self.x_tail)

    @property
    def p_z(self) -> np.ndarray:
        return self._marginal(self.z_tail)

    def _marginal(self, tail: float) -> np.ndarray:
        p = np.full(self.D, tail)
        p[0] = 1.0 - (self.D - 1) * tail
        return p

    def joint(self) -> np.ndarray:
        """``P[r, s] = p_x[r] * p_z[s]``."""
        return np.outer(self.p_x, self.p_z)


def final_distribution(succ: SuccessProbs, topo: Topology, D: int) -> FinalErrorDistribution:
    """Combine station success probabilities along the line.

    Even-numbered stations and Bob's X round feed the X marginal; the first
    station, the remaining odd-numbered stations and Bob's Z round feed the Z
    marginal. Every failed round contributes a uniformly guessed exponent.
    """
    if topo.N % 2:
        raise OddLinkCount(f"link count N={topo.N} must be even")
    half = topo.N // 2
    log_rep = _log_survival(succ.fail_rep)
    log_qx = half * log_rep + _log_survival(succ.fail_bob_x)
    log_qz = _log_survival(succ.fail_first_rep) + _log_survival(succ.fail_bob_z)
    if half > 1:
        log_qz += (half - 1) * log_rep
    # -expm1(log q) = 1 - q
    return FinalErrorDistribution(
        D=D,
        x_tail=-math.expm1(log_qx) / D,
        z_tail=-math.expm1(log_qz) / D,
    )


def marginal_entropy(D: int, tail: float) -> float:
    """Shannon entropy (bits) of a distribution with ``D - 1`` equal entries ``tail``."""
    if tail <= 0.0:
        return 0.0
    rest = (D - 1) * tail
    p0 = 1.0 - rest
    h = -(D - 1) * tail * math.log(tail)
    if p0 > 0.0:
        h -= p0 * math.log1p(-rest)
    return h / _LN2


def entropy(dist: FinalErrorDistribution) -> float:
    """``H(P) = H(p_x) + H(p_z)`` in bits."""
    return marginal_entropy(dist.D, dist.x_tail) + marginal_entropy(dist.D, dist.z_tail)


def plob_bound(M: int, alpha: float, L: float) -> float:
    """Repeaterless bound ``-M log2(1 - eta)`` for total transmissivity ``eta``."""
    eta = link_transmissivity(alpha, L)
    if eta >= 1.0:
        return math.inf
    return -M * math.log1p(-eta) / _LN2


def capacity_bounds(H: float, D: int, M: int, alpha: float, L: float) -> tuple[float, float, float]:
    """Return ``(B_rep_lower, B_plob_upper, delta)``."""
    b_rep = max(0.0, math.log2(D) - H)
    b_plob = plob_bound(M, alpha, L)
    return b_rep, b_plob, b_rep - b_plob


@dataclass(frozen=True)
class GainReport:
    encoding: str
    D: int
    n: int
    d: int
    t: int
    L: float
    N: int
    L0: float
    eta0: float
    f_S: float
    success: SuccessProbs
    entropy: float
    B_rep_lower: float
    B_plob_upper: float
    delta: float
    M: int
    even_distance: bool = False
    params: PhysicalParams = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["success"] = asdict(self.success)
        out["params"] = asdict(self.params) if self.params is not None else None
        return out


def evaluate(
    params: PhysicalParams, topo: Topology, code: CodeParams, enc: Encoding
) -> GainReport:
    """Full gain evaluation for one repeater configuration."""
    enc = Encoding.parse(enc)
    dists = station_distributions(params, topo, code, enc)
    succ = success_probs(dists, code)
    fin = final_distribution(succ, topo, code.D)
    H = entropy(fin)
    M = enc.modes(code)
    b_rep, b_plob, delta = capacity_bounds(H, code.D, M, params.alpha, topo.L)
    return GainReport(
        encoding=enc.value,
        D=code.D,
        n=code.n,
        d=code.d,
        t=code.t,
        L=topo.L,
        N=topo.N,
        L0=topo.L0,
        eta0=link_transmissivity(params.alpha, topo.L0),
        f_S=storage_error_rate(params.gamma, topo.L, params.c),
        success=succ,
        entropy=H,
        B_rep_lower=b_rep,
        B_plob_upper=b_plob,
        delta=delta,
        M=M,
        even_distance=code.even_distance,
        params=params,
    )


@dataclass(frozen=True)
class PseudothresholdResult:
    """Crossing of physical and logical error rates for a flat single-qudit channel.

    ``physical_rate`` is the probability ``(D - 1) p`` that a qudit carries any
    error; ``per_error_rate`` is the probability ``p`` of each nontrivial exponent.
    The logical rate is the block failure probability ``1 - p_succ``.
    """

    physical_rate: float
    per_error_rate: float
    convention: str = "physical (D-1)*p_e equals logical 1 - p_succ"


def pseudothreshold(code: CodeParams, grid: int = 4000) -> PseudothresholdResult:
    """Locate the code-capacity pseudothreshold by bracketing and root finding."""
    D, n, t = code.D, code.n, code.t

    def gap(x: float) -> float:
        _, fail = _binomial_split(1.0 - x, x, n, t)
        return fail - x

    hi = (D - 1) / D
    xs = np.linspace(0.0, hi, grid + 1)[1:]
    vals = [gap(x) for x in xs]
    tol = 1e-14
    for i in range(len(xs) - 1):
        if vals[i] < -tol and vals[i + 1] >= 0:
            root = brentq(gap, xs[i], xs[i + 1], xtol=1e-15)
            return PseudothresholdResult(physical_rate=root, per_error_rate=root / (D - 1))
    raise NoCrossing(f"no pseudothreshold for {code.label()} in (0, {hi:.4g})")
