"""Shared fixtures and an independent KKT checker.

The onion channel here is typed in from a hand-written path table rather
than built by :mod:`leakcap.models`, so solver tests do not depend on the
network builder.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction as Fr

import numpy as np
import pytest

from leakcap import Channel
from leakcap.constraints import Relation, normalize

LN2 = math.log(2.0)

# Hand-written path table: sender -> [(path, observation, probability)].
ONION_TABLE = {
    "1": [(("1", "2", "R"), "(N, N)", Fr(1, 3)),
          (("1", "2", "3", "R"), "(2, R)", Fr(1, 3)),
          (("1", "2", "4", "3", "R"), "(4, R)", Fr(1, 3))],
    "2": [(("2", "4", "3", "R"), "(4, R)", Fr(1, 2)),
          (("2", "3", "R"), "(2, R)", Fr(1, 2))],
    "3": [(("3", "2", "R"), "(N, R)", Fr(1))],
    "4": [(("4", "3", "R"), "(4, R)", Fr(1, 2)),
          (("4", "3", "2", "R"), "(4, 2)", Fr(1, 2))],
}

ONION_OUTPUTS = ("(N, N)", "(2, R)", "(4, R)", "(N, R)", "(4, 2)")
ONION_ROWS = [
    [1 / 3, 1 / 3, 1 / 3, 0, 0],
    [0, 1 / 2, 1 / 2, 0, 0],
    [0, 0, 0, 1, 0],
    [0, 0, 1 / 2, 0, 1 / 2],
]


@pytest.fixture
def onion():
    return Channel.from_rows(ONION_ROWS, ("h1", "h2", "h3", "h4"), ONION_OUTPUTS)


def threaded_rows(p, q):
    a = p * (1 - q) + (1 - p) * (1 - q) * p
    b = 1 - p * q - (1 - p) * p * q
    return [[a, 1 - a], [b, 1 - b]]


@pytest.fixture
def threaded():
    return Channel.from_rows(threaded_rows(1 / 3, 1 / 3), ("h_odd", "h_even"), ("0", "1"))


def binary_entropy(x):
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def random_channel(rng, n, m, sparsity=0.0):
    """Row-stochastic table; with ``sparsity`` some entries are zeroed."""
    rows = rng.dirichlet(np.ones(m), size=n)
    if sparsity:
        mask = rng.random((n, m)) < sparsity
        mask[np.arange(n), rng.integers(0, m, n)] = False
        rows = np.where(mask, 0.0, rows)
        rows /= rows.sum(axis=1, keepdims=True)
    return Channel.from_rows(rows)


def random_deterministic(rng, n, m):
    rows = np.zeros((n, m))
    rows[np.arange(n), rng.integers(0, m, n)] = 1.0
    return Channel.from_rows(rows)


def kkt_violations(ch, cs, sol, tol=1e-8):
    """Independent check of an exact solution; returns a list of problems.

    Stationarity is required on the support; on zero coordinates the residual
    may only be negative (moving mass there cannot raise the leakage).
    """
    problems = []
    h = np.asarray(sol.h_star, dtype=float)
    phi = ch.phi
    q = phi @ h
    lam0 = sol.lambda0
    lam = np.asarray(sol.lambdas, dtype=float)
    cons = list(cs) if cs is not None else []
    if h.min() < 0:
        problems.append(f"negative entry {h.min()}")
    if abs(h.sum() - 1.0) > 1e-10:
        problems.append(f"sum {h.sum()}")
    for i in range(h.size):
        d = 0.0
        for s in range(phi.shape[0]):
            if phi[s, i] > 0:
                if q[s] <= 0:
                    d = math.inf
                    break
                d += phi[s, i] * math.log(phi[s, i] / q[s])
        r = d - 1.0 + lam0
        for k, c in enumerate(cons):
            f = c.coeffs if c.relation not in (Relation.LESS_EQUAL, Relation.STRICTLY_LESS) else -c.coeffs
            r += lam[k] * f[i]
        if h[i] > 0 and abs(r) > tol:
            problems.append(f"residual {r} at secret {i}")
        if h[i] == 0 and r > tol:
            problems.append(f"zero-set residual {r} at secret {i}")
    for k, c in enumerate(cons):
        nc = normalize(c)
        g = float(nc.coeffs @ h - nc.bound)
        if nc.relation is Relation.EQUAL:
            if abs(g) > tol:
                problems.append(f"equality {k} off by {g}")
            continue
        if lam[k] < -1e-9:
            problems.append(f"negative multiplier {lam[k]} on {k}")
        if g < -tol:
            problems.append(f"constraint {k} violated by {g}")
        scale = float(np.max(np.abs(c.coeffs)))
        if abs(lam[k] * scale * g) > tol:
            problems.append(f"complementary slackness {lam[k] * scale * g} on {k}")
    return problems


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
