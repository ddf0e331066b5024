"""Shared brute-force oracles and the acceptance summary hook."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

# criterion number -> list of (label, ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list] = defaultdict(list)


def record(criterion: int, label: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE[criterion].append((label, bool(ok), detail))
    print(f"criterion {criterion} [{label}]: {'PASS' if ok else 'FAIL'} {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        ok = all(c[1] for c in checks)
        failed = [c[0] for c in checks if not c[1]]
        note = f" (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} [{len(checks)} checks]{note}")


# ---- independent reference implementations ----


def brute_block_success(p, n: int, t: int) -> float:
    """Sum of pattern probabilities over all ``D**n`` exponent tuples of weight <= t."""
    p = list(p)
    total = 0.0
    terms = []
    for pattern in itertools.product(range(len(p)), repeat=n):
        if sum(1 for e in pattern if e) <= t:
            terms.append(math.prod(p[e] for e in pattern))
    total = math.fsum(terms)
    return total


def brute_composition_sum(p, k: int) -> float:
    """Sum over all ``(r_1..r_k)`` with ``r_i >= 1`` of the product of ``p[r_i]``."""
    D = len(p)
    return math.fsum(math.prod(p[r] for r in rs) for rs in itertools.product(range(1, D), repeat=k))


def brute_fock_approx(D: int, eta0: float) -> list:
    p = [0.0] * D
    for r in range(1, D):
        p[r] = max(math.comb(k, r) * eta0 ** (k - r) * (1 - eta0) ** r for k in range(r, D))
    p[0] = 1.0 - sum(p[1:])
    return p


def convolve_rounds(D: int, rounds) -> np.ndarray:
    """Exact distribution of a signed sum of independent logical outcomes in Z/DZ.

    ``rounds`` is a list of ``(success, sign)``; an outcome is 0 on success and
    uniform otherwise.
    """
    dist = np.zeros(D)
    dist[0] = 1.0
    for succ, sign in rounds:
        step = np.full(D, (1.0 - succ) / D)
        step[0] += succ
        out = np.zeros(D)
        for a in range(D):
            for b in range(D):
                out[(a + sign * b) % D] += dist[a] * step[b]
        dist = out
    return dist


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
