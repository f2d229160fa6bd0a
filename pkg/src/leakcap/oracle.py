"""Independent numerical capacity estimates used to cross-check the KKT solver.

Neither routine shares code with the Newton solver beyond the basic
information-theoretic helpers of :mod:`leakcap.channel`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NATS_TO_BITS, Channel, divergences
from .constraints import ConstraintSet, Relation, normalize


@dataclass(frozen=True)
class OracleResult:
    capacity_bits: float
    argmax: np.ndarray | None
    iterations: int
    gap: float
    feasible: bool = True


def blahut_arimoto(ch: Channel, tol: float = 1e-9, max_iter: int = 1_000_000) -> OracleResult:
    """Unconstrained capacity by Blahut-Arimoto alternating maximization.

    Stops once ``max_i D_i - sum_i h_i D_i < tol`` (bits), which brackets the
    capacity between the two terms.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    phi = ch.phi
    n = ch.n_inputs
    h = np.full(n, 1.0 / n)
    tol_nats = tol / NATS_TO_BITS
    gap = np.inf
    for it in range(1, max_iter + 1):
        q = phi @ h
        d = divergences(phi, q)
        lower = float(h @ d)
        upper = float(d.max())
        gap = upper - lower
        if gap < tol_nats:
            break
        w = h * np.exp(d - upper)
        h = w / w.sum()
    return OracleResult(lower * NATS_TO_BITS, h, it, gap * NATS_TO_BITS)


def _mi_bits_batch(phi: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Mutual information (bits) for every row of ``H``."""
    Q = H @ phi.T
    with np.errstate(divide="ignore", invalid="ignore"):
        logphi = np.where(phi > 0, np.log(phi), 0.0)
        logQ = np.where(Q > 0, np.log(Q), 0.0)
    # sum_i h_i sum_s phi_si ln phi_si  -  sum_s q_s ln q_s
    a = H @ (phi * logphi).sum(axis=0)
    b = (Q * logQ).sum(axis=1)
    return np.maximum(a - b, 0.0) * NATS_TO_BITS


def _feasible_mask(cs: ConstraintSet, H: np.ndarray, tol: float, closure: bool = False) -> np.ndarray:
    mask = np.ones(H.shape[0], dtype=bool)
    for c in cs:
        nc = normalize(c)
        g = H @ nc.coeffs - nc.bound
        if nc.relation is Relation.EQUAL:
            mask &= np.abs(g) <= tol
        elif nc.relation is Relation.STRICTLY_GREATER and not closure:
            mask &= g > 0
        else:
            mask &= g >= -tol
    return mask


def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``1/steps``."""
    return np.concatenate(list(_grid_chunks(n, steps)))


def _grid_chunks(n: int, steps: int):
    """Simplex grid in chunks: the last three coordinates are vectorized."""
    if n == 1:
        yield np.ones((1, 1))
        return
    if n == 2:
        a = np.arange(steps + 1)
        yield np.column_stack((a, steps - a)) / steps
        return
    i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    for head in _compositions(n - 3, steps):
        rest = steps - sum(head)
        keep = i + j <= rest
        a, b = i[keep], j[keep]
        block = np.empty((a.size, n))
        block[:, : n - 3] = head
        block[:, n - 3] = a
        block[:, n - 2] = b
        block[:, n - 1] = rest - a - b
        yield block / steps


def _compositions(k: int, total: int):
    """Tuples of ``k`` non-negative integers with sum at most ``total``."""
    if k == 0:
        yield ()
        return
    for first in range(total + 1):
        for tail in _compositions(k - 1, total - first):
            yield (first,) + tail


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1), 0.0)


def project_feasible(y: np.ndarray, cs: ConstraintSet, iters: int = 20000, tol: float = 1e-14) -> np.ndarray:
    """Projection onto ``simplex ∩ {constraints}`` by Dykstra's algorithm.

    Strict inequalities are projected onto their closure.
    """
    sets = [None] + [normalize(c) for c in cs]
    x = project_simplex(y)
    if _feasible_mask(cs, x[None], 1e-15, closure=True)[0]:
        return x
    x = y.copy()
    incs = [np.zeros_like(y) for _ in sets]
    for _ in range(iters):
        x_prev = x
        for k, c in enumerate(sets):
            z = x + incs[k]
            if c is None:
                p = project_simplex(z)
            else:
                a = c.coeffs
                viol = a @ z - c.bound
                if c.relation is Relation.EQUAL or viol < 0:
                    p = z - viol * a / (a @ a)
                else:
                    p = z
            incs[k] = z - p
            x = p
        if np.max(np.abs(x - x_prev)) < tol:
            break
    return x


def _admissible(h: np.ndarray, cs: ConstraintSet, tol: float = 1e-10) -> bool:
    return bool(h.min() >= -tol and abs(h.sum() - 1.0) <= tol
                and _feasible_mask(cs, h[None], tol, closure=True)[0])


def _ascent(phi, cs, h0, steps=3000, lr=0.5):
    """Projected gradient ascent with an adaptive step; keeps admissible iterates only."""
    h = project_feasible(h0, cs)
    best_h, best = None, -np.inf
    if _admissible(h, cs):
        best_h, best = np.clip(h, 0.0, None), _mi_bits_batch(phi, np.clip(h, 0.0, None)[None])[0]
    for _ in range(steps):
        q = phi @ h
        grad = np.minimum(divergences(phi, np.maximum(q, 1e-300)) - 1.0, 50.0)
        h_new = project_feasible(h + lr * grad, cs)
        if np.max(np.abs(h_new - h)) < 1e-12:
            break
        val = _mi_bits_batch(phi, np.clip(h_new, 0.0, None)[None])[0]
        if val > best and _admissible(h_new, cs):
            best, best_h = val, np.clip(h_new, 0.0, None)
            h = h_new
            lr *= 1.5
        else:
            lr *= 0.5
            if lr < 1e-12:
                break
    return best_h, best


def default_resolution(n: int) -> float:
    return 1 / 500 if n <= 3 else 1 / 100


def constrained_brute_force(ch: Channel, cs=None, resolution: float | None = None,
                            mode: str = "auto", starts: int = 8, seed: int = 0,
                            tol: float = 1e-9) -> OracleResult:
    """Best feasible prior found by grid scan and/or projected gradient ascent.

    ``mode='grid'`` scans the simplex (``n <= 4``); ``'ascent'`` runs
    projected gradient ascent from several random starts; ``'auto'`` scans the
    grid when ``n <= 4`` and polishes the best grid point by ascent.
    Every returned value is the information of a feasible prior, so it is a
    lower bound on the constrained capacity.
    """
    cs = ConstraintSet() if cs is None else (cs if isinstance(cs, ConstraintSet) else ConstraintSet(tuple(cs)))
    cs = cs.oriented()
    n = ch.n_inputs
    phi = ch.phi
    if mode not in ("auto", "grid", "ascent"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "grid" and n > 4:
        raise ValueError("grid mode supports at most 4 secrets")
    best_h, best, iters = None, -np.inf, 0

    if mode in ("grid", "auto") and n <= 4:
        res = resolution or default_resolution(n)
        steps = int(round(1 / res))
        eq_tol = 0.5 * res if any(c.relation is Relation.EQUAL for c in cs) else tol
        for H in _grid_chunks(n, steps):
            H = H[_feasible_mask(cs, H, eq_tol)]
            iters += len(H)
            if len(H):
                vals = _mi_bits_batch(phi, H)
                k = int(np.argmax(vals))
                if vals[k] > best:
                    best_h, best = H[k], float(vals[k])

    if mode == "ascent" or (mode == "auto"):
        rng = np.random.default_rng(seed)
        inits = [] if best_h is None else [best_h]
        inits += [np.full(n, 1.0 / n)] + [rng.dirichlet(np.ones(n)) for _ in range(starts - 1)]
        if mode == "auto" and n <= 4 and best_h is not None:
            inits = inits[:1]
        for h0 in inits:
            h, val = _ascent(phi, cs, h0)
            iters += 1
            if h is not None and val > best + 1e-15:
                best_h, best = h, float(val)

    if best_h is None:
        return OracleResult(float("nan"), None, iters, float("nan"), feasible=False)
    return OracleResult(best, best_h, iters, 0.0)


__all__ = [
    "OracleResult", "blahut_arimoto", "constrained_brute_force", "project_simplex",
    "project_feasible", "simplex_grid", "default_resolution",
]
