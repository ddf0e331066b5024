"""Monte Carlo propagation of Pauli error exponents along the repeater line.

Used as an independent check of the closed-form success probabilities and of
the final error distribution. Everything is tracked in Z/DZ; no states are
simulated.

Randomness comes from numpy's PCG64 generator. A run is split into fixed-size
chunks whose seeds are spawned from ``SeedSequence(seed)``, so the result only
depends on ``(inputs, samples, seed)`` and not on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import PhysicalParams, Topology
from .qecc import CodeParams
from .statistics import Encoding, SingleQuditErrorDist, StationDistributions, station_distributions

__all__ = [
    "ChainSample",
    "EmpiricalDistribution",
    "BlockEstimate",
    "measurement_rounds",
    "trace_chain",
    "simulate_rounds",
    "simulate_chain",
    "Round",
    "estimate_block_success",
    "Comparison",
    "analytic_values",
    "compare_with_oracle",
]

_DRAWS_PER_CHUNK = 2_000_000


@dataclass(frozen=True)
class Round:
    """One error-correction attempt whose logical outcome enters Bob's byproduct."""

    name: str
    dist: SingleQuditErrorDist
    target: str  # "x" or "z"
    sign: int


def measurement_rounds(dists: StationDistributions, N: int) -> list[Round]:
    """Stations ``1..N`` (station ``N`` is Bob's measurement of the incoming
    qudit) followed by Bob's X and Z stabilizer rounds.

    Even stations feed the X exponent with sign ``(-1)^(i/2)``; odd station
    ``N + 1 - 2j`` feeds the Z exponent with sign ``(-1)^(j+1)``.
    """
    rounds = []
    for i in range(1, N + 1):
        dist = dists.first_rep if i == 1 else dists.rep
        if i % 2 == 0:
            rounds.append(Round(f"station{i}", dist, "x", (-1) ** (i // 2)))
        else:
            j = (N + 1 - i) // 2
            rounds.append(Round(f"station{i}", dist, "z", (-1) ** (j + 1)))
    rounds.append(Round("bob_x", dists.bob_x, "x", 1))
    rounds.append(Round("bob_z", dists.bob_z, "z", 1))
    return rounds


def _cdf(dist: SingleQuditErrorDist) -> np.ndarray:
    c = np.cumsum(dist.p)
    c[-1] = 1.0
    return c


def _draw_errors(rng: np.random.Generator, cdf: np.ndarray, shape) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(shape), side="right")


@dataclass(frozen=True)
class ChainSample:
    """Trace of one simulated run."""

    errors: dict  # round name -> per-qudit exponents
    logical: dict  # round name -> logical exponent (0 if corrected)
    c_even: int
    c_odd: int

    @property
    def x(self) -> int:
        return self.c_even

    @property
    def z(self) -> int:
        return self.c_odd


def trace_chain(
    params: PhysicalParams,
    topo: Topology,
    code: CodeParams,
    enc: Encoding,
    rng: np.random.Generator,
) -> ChainSample:
    D, n, t = code.D, code.n, code.t
    dists = station_distributions(params, topo, code, enc)
    errors, logical = {}, {}
    acc = {"x": 0, "z": 0}
    for rnd in measurement_rounds(dists, topo.N):
        e = _draw_errors(rng, _cdf(rnd.dist), n)
        errors[rnd.name] = e
        g = int(rng.integers(D)) if np.count_nonzero(e) > t else 0
        logical[rnd.name] = g
        acc[rnd.target] = (acc[rnd.target] + rnd.sign * g) % D
    return ChainSample(errors=errors, logical=logical, c_even=acc["x"], c_odd=acc["z"])


@dataclass
class EmpiricalDistribution:
    """Counts of the joint logical (X, Z) exponent on Bob's qudit."""

    D: int
    counts: np.ndarray  # shape (D, D), counts[r, s]
    samples: int

    def frequencies(self) -> np.ndarray:
        return self.counts / self.samples

    @property
    def p_x(self) -> np.ndarray:
        return self.counts.sum(axis=1) / self.samples

    @property
    def p_z(self) -> np.ndarray:
        return self.counts.sum(axis=0) / self.samples

    def stderr(self, p) -> np.ndarray:
        """Binomial standard error of frequencies ``p`` at this sample count."""
        p = np.asarray(p, dtype=float)
        return np.sqrt(p * (1.0 - p) / self.samples)

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        if other.D != self.D:
            raise ValueError("cannot merge distributions of different dimension")
        return EmpiricalDistribution(self.D, self.counts + other.counts, self.samples + other.samples)


def _chunk_sizes(samples: int, n_per_sample: int) -> list[int]:
    size = max(1, _DRAWS_PER_CHUNK // max(1, n_per_sample))
    full, rest = divmod(samples, size)
    return [size] * full + ([rest] if rest else [])


def _simulate_chunk(rounds, D, n, t, m, seed_seq) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    acc = {"x": np.zeros(m, dtype=np.int64), "z": np.zeros(m, dtype=np.int64)}
    for rnd in rounds:
        e = _draw_errors(rng, _cdf(rnd.dist), (m, n))
        failed = np.count_nonzero(e, axis=1) > t
        guess = rng.integers(0, D, size=m)
        acc[rnd.target] += rnd.sign * np.where(failed, guess, 0)
    x = acc["x"] % D
    z = acc["z"] % D
    return np.bincount(x * D + z, minlength=D * D).reshape(D, D)


def simulate_rounds(
    rounds: list[Round], code: CodeParams, samples: int, seed: int, workers: int = 1
) -> EmpiricalDistribution:
    """Sample the accumulated logical exponents of an explicit list of rounds."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    D, n, t = code.D, code.n, code.t
    sizes = _chunk_sizes(samples, n * len(rounds))
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(rounds, D, n, t, m, s) for m, s in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _simulate_chunk(*a), jobs))
    else:
        parts = [_simulate_chunk(*a) for a in jobs]
    return EmpiricalDistribution(D=D, counts=sum(parts), samples=samples)


def simulate_chain(
    params: PhysicalParams,
    topo: Topology,
    code: CodeParams,
    enc: Encoding,
    samples: int,
    seed: int,
    workers: int = 1,
) -> EmpiricalDistribution:
    """Sample the logical error on Bob's qudit ``samples`` times."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    dists = station_distributions(params, topo, code, enc)
    return simulate_rounds(measurement_rounds(dists, topo.N), code, samples, seed, workers)


@dataclass(frozen=True)
class BlockEstimate:
    p_succ: float
    stderr: float
    samples: int


def estimate_block_success(
    dist: SingleQuditErrorDist, code: CodeParams, samples: int, seed: int
) -> BlockEstimate:
    """Fraction of sampled ``n``-qudit patterns with at most ``t`` errors."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    n, t = code.n, code.t
    cdf = _cdf(dist)
    sizes = _chunk_sizes(samples, n)
    hits = 0
    for m, s in zip(sizes, np.random.SeedSequence(seed).spawn(len(sizes))):
        rng = np.random.default_rng(s)
        e = _draw_errors(rng, cdf, (m, n))
        hits += int(np.count_nonzero(np.count_nonzero(e, axis=1) <= t))
    p = hits / samples
    return BlockEstimate(p_succ=p, stderr=math.sqrt(p * (1.0 - p) / samples), samples=samples)


@dataclass(frozen=True)
class Comparison:
    """Analytic value versus Monte Carlo estimate, in units of the binomial error."""

    quantity: str
    analytic: float
    empirical: float
    sigma: float
    z: float
    ok: bool


def _compare(name: str, analytic: float, empirical: float, samples: int, limit: float) -> Comparison:
    sigma = math.sqrt(max(analytic * (1.0 - analytic), 0.0) / samples)
    diff = empirical - analytic
    if sigma == 0.0:
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        z = diff / sigma
    return Comparison(name, analytic, empirical, sigma, z, abs(z) <= limit)


def analytic_values(params, topo, code, enc) -> dict:
    """Closed-form quantities checked by :func:`compare_with_oracle`."""
    from .statistics import final_distribution, success_probs

    dists = station_distributions(params, topo, code, enc)
    succ = success_probs(dists, code)
    fin = final_distribution(succ, topo, code.D)
    return {
        "p_x[0]": float(fin.p_x[0]),
        "p_z[0]": float(fin.p_z[0]),
        "succ_rep": succ.p_succ_rep,
        "succ_first_rep": succ.p_succ_first_rep,
        "succ_bob_x": succ.p_succ_bob_x,
        "succ_bob_z": succ.p_succ_bob_z,
    }


def compare_with_oracle(
    params: PhysicalParams,
    topo: Topology,
    code: CodeParams,
    enc: Encoding,
    samples: int,
    seed: int,
    limit: float = 4.0,
    analytic: dict | None = None,
) -> list[Comparison]:
    """Check final-distribution and block-success values against sampling.

    Each quantity passes if it lies within ``limit`` binomial standard errors
    (computed from the analytic value) of its estimate.
    """
    if analytic is None:
        analytic = analytic_values(params, topo, code, enc)
    emp = simulate_chain(params, topo, code, enc, samples, seed)
    out = [
        _compare("p_x[0]", analytic["p_x[0]"], float(emp.p_x[0]), samples, limit),
        _compare("p_z[0]", analytic["p_z[0]"], float(emp.p_z[0]), samples, limit),
    ]
    dists = station_distributions(params, topo, code, enc)
    for i, name in enumerate(("rep", "first_rep", "bob_x", "bob_z")):
        est = estimate_block_success(getattr(dists, name), code, samples, seed + 1 + i)
        out.append(_compare("succ_" + name, analytic["succ_" + name], est.p_succ, samples, limit))
    return out
