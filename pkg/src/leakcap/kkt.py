"""Constrained channel capacity by solving the KKT stationarity system.

For a channel ``phi`` and linear constraints ``g_k(h) >= F_k`` the capacity
achieving prior satisfies, for every secret ``i`` with ``h_i > 0``::

    sum_s phi[s, i] ln(phi[s, i] / o_s) - 1 + lambda_0 + sum_k lambda_k f[i, k] = 0

together with ``sum_i h_i = 1``, ``g_k(h) = F_k`` for the binding (active)
constraints and ``lambda_k = 0`` for the others.  Which inequalities bind is
not known in advance, so :func:`solve` enumerates active sets, runs damped
Newton on each resulting square system and keeps the candidates passing the
sign and feasibility checks.  Mutual information is concave in ``h``, so a
valid KKT point is a global maximum.

Multipliers are reported for the constraints as given, after turning
``<=``/``<`` into ``>=``/``>``; they are not rescaled.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from .channel import (
    NATS_TO_BITS,
    Channel,
    ChannelError,
    divergences,
    entropy,
    mutual_information,
)
from .constraints import (
    ConstraintError,
    ConstraintSet,
    LinearConstraint,
    Relation,
    normalize,
)

log = logging.getLogger(__name__)


class Status(enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"
    INFEASIBLE = "infeasible"
    NO_VALID_STATIONARY_POINT = "no_valid_stationary_point"


class SolverError(RuntimeError):
    pass


class DomainError(ChannelError):
    """An observation reachable from a secret has zero probability."""


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = 1e-10
    max_iter: int = 200
    restarts: int = 10
    seed: int = 0
    activity_tol: float = 1e-8
    dual_tol: float = 1e-9
    boundary_floor: float = 1e-9
    support_enum_limit: int = 12
    enumeration_limit: int = 20
    crosscheck_tol: float = 1e-6
    first_valid: bool = False


@dataclass(frozen=True)
class Diagnostics:
    max_residual: float = float("nan")
    iterations: int = 0
    restarts: int = 0
    zero_set: tuple = ()
    candidates_tried: int = 0
    oracle_fallback: bool = False
    messages: tuple = ()


@dataclass(frozen=True, eq=False)
class KktSolution:
    """Solver output.  ``lambdas[k]`` is zero for constraints outside ``active_set``."""

    h_star: np.ndarray | None
    lambda0: float
    lambdas: np.ndarray
    active_set: tuple
    capacity_bits: float
    capacity_nats: float
    status: Status
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    valid: bool = True
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (Status.EXACT, Status.APPROXIMATE)


@dataclass(frozen=True)
class KktSystem:
    """Square KKT system for one active set, restricted to a support.

    Unknowns are ``h[support]``, ``lambda_0`` and ``lambda[active]``.
    """

    phi: np.ndarray
    F: np.ndarray
    bounds: np.ndarray
    active: tuple
    support: tuple

    @property
    def size(self) -> int:
        return len(self.support) + 1 + len(self.active)

    def blocks(self):
        """``(P, A, b, c)``: reduced channel, constraint rows, right-hand side and
        the constant ``sum_s P[s, i] ln P[s, i]`` of every column."""
        P = self.phi[:, self.support]
        P = P[P.sum(axis=1) > 0.0]
        A = np.ones((1 + len(self.active), len(self.support)))
        if self.active:
            A[1:] = self.F[np.ix_(self.support, self.active)].T
        b = np.concatenate(([1.0], self.bounds[list(self.active)]))
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(P > 0.0, P * np.log(P), 0.0).sum(axis=0)
        return P, A, b, c

    def residual(self, x, blocks=None):
        P, A, b, c = blocks or self.blocks()
        n = len(self.support)
        h, nu = x[:n], x[n:]
        q = P @ h
        if np.any(q <= 0.0):
            return np.full(x.size, np.inf)
        r = c - P.T @ np.log(q) - 1.0 + A.T @ nu
        return np.concatenate((r, A @ h - b))

    def jacobian(self, x, blocks=None):
        P, A, _, _ = blocks or self.blocks()
        n = len(self.support)
        q = P @ x[:n]
        H = -(P.T / q) @ P
        k = A.shape[0]
        return np.block([[H, A.T], [A, np.zeros((k, k))]])


# -- residuals and the capacity identity ------------------------------------

def _oriented(cs) -> ConstraintSet:
    if cs is None:
        return ConstraintSet()
    if not isinstance(cs, ConstraintSet):
        cs = ConstraintSet(tuple(cs))
    return cs.oriented()


def _fmatrix(cs: ConstraintSet, n: int) -> np.ndarray:
    return cs.matrix() if len(cs) else np.zeros((n, 0))


def stationarity_residuals(ch: Channel, h, lambda0: float, lambdas=None, cs=None) -> np.ndarray:
    """Residual of the stationarity equation for every secret (nats).

    Secrets whose observations include one of probability zero get ``+inf``.
    """
    h = np.asarray(h, dtype=float)
    cs = _oriented(cs)
    F = _fmatrix(cs, ch.n_inputs)
    lam = np.zeros(F.shape[1]) if lambdas is None else np.asarray(lambdas, dtype=float)
    q = ch.phi @ h
    return divergences(ch.phi, q) - 1.0 + lambda0 + F @ lam


def stationarity_residual(ch: Channel, h, lambda0: float, lambdas, cs, i: int) -> float:
    """Stationarity residual for secret ``i``.

    Raises :class:`DomainError` when an observation possible for ``i`` has
    zero output probability.
    """
    h = np.asarray(h, dtype=float)
    q = ch.phi @ h
    sup = ch.support(i)
    if np.any(q[sup] <= 0.0):
        raise DomainError(f"observation with zero probability is reachable from secret {i}")
    return float(stationarity_residuals(ch, h, lambda0, lambdas, cs)[i])


def capacity_from_multipliers(h, lambda0: float, lambdas=None, cs=None) -> float:
    """``d * sum_i h_i (1 - lambda_0 - sum_k lambda_k f[i, k])`` in bits."""
    h = np.asarray(h, dtype=float)
    cs = _oriented(cs)
    F = _fmatrix(cs, h.size)
    lam = np.zeros(F.shape[1]) if lambdas is None else np.asarray(lambdas, dtype=float)
    return float(NATS_TO_BITS * np.sum(h * (1.0 - lambda0 - F @ lam)))


# -- Newton -----------------------------------------------------------------

@dataclass
class _NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    reason: str


def _lin_solve(J, rhs):
    try:
        step = np.linalg.solve(J, rhs)
        if np.all(np.isfinite(step)) and np.linalg.norm(J @ step - rhs) <= 1e-8 * (1 + np.linalg.norm(rhs)):
            return step
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(J, rhs, rcond=1e-13)[0]


def _newton(system: KktSystem, x0: np.ndarray, opts: SolverOptions) -> _NewtonResult:
    blocks = system.blocks()
    n = len(system.support)
    x = x0.copy()
    r = system.residual(x, blocks)
    merit = 0.5 * r @ r
    for it in range(opts.max_iter + 1):
        if np.max(np.abs(r)) <= opts.residual_tol:
            return _NewtonResult(x, True, it, "")
        if it == opts.max_iter:
            break
        step = _lin_solve(system.jacobian(x, blocks), -r)
        dh = step[:n]
        t = 1.0
        neg = dh < 0
        capped = False
        if np.any(neg):
            t_max = 0.9 * float(np.min(-x[:n][neg] / dh[neg]))
            if t_max < 1.0:
                t, capped = t_max, True
        accepted = False
        while t > 1e-10:
            xt = x + t * step
            rt = system.residual(xt, blocks)
            mt = 0.5 * rt @ rt
            if mt <= (1.0 - 2e-4 * t) * merit:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return _NewtonResult(x, False, it, "boundary" if capped else "line search stalled")
        x, r, merit = xt, rt, mt
        if np.min(x[:n]) < opts.boundary_floor:
            return _NewtonResult(x, False, it + 1, "boundary")
    return _NewtonResult(x, False, opts.max_iter, "iteration limit")


def _start(n: int, k: int, h=None) -> np.ndarray:
    h = np.full(n, 1.0 / n) if h is None else h
    return np.concatenate((h, [1.0], np.zeros(k - 1)))


def _solve_system(system: KktSystem, opts: SolverOptions, rng, h_init=None) -> tuple:
    """Newton from ``h_init`` (default uniform), then from random interior points."""
    n, k = len(system.support), 1 + len(system.active)
    total_it = 0
    res = None
    for attempt in range(opts.restarts + 1):
        h0 = h_init if attempt == 0 else rng.dirichlet(np.ones(n))
        res = _newton(system, _start(n, k, h0), opts)
        total_it += res.iterations
        if res.converged:
            return res, attempt, total_it
    return res, opts.restarts, total_it


def _interior_point(A: np.ndarray, b: np.ndarray):
    """Point of ``{A h = b, h >= 0}`` maximizing ``min_i h_i`` (or ``None``)."""
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack((-np.eye(n), np.ones((n, 1))))
    A_eq = np.hstack((A, np.zeros((A.shape[0], 1))))
    bounds = [(0, None)] * n + [(None, 1.0 / n)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=b, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        return None
    return res.x[:n]


def _barrier_support(system: KktSystem):
    """Guess the zero set by following a log-barrier path toward the optimum."""
    P, A, b, _ = system.blocks()
    n = len(system.support)
    h = _interior_point(A, b)
    if h is None:
        return None
    nu = np.zeros(A.shape[0])
    k = A.shape[0]
    for mu in np.geomspace(1e-1, 1e-13, 13):
        for _ in range(60):
            q = P @ h
            r1 = divergences(P, q) - 1.0 + mu / h + A.T @ nu
            r2 = A @ h - b
            r = np.concatenate((r1, r2))
            if np.max(np.abs(r)) <= 1e-11:
                break
            H = -(P.T / q) @ P - np.diag(mu / h**2)
            K = np.block([[H, A.T], [A, np.zeros((k, k))]])
            step = _lin_solve(K, -r)
            dh = step[:n]
            t = 1.0
            neg = dh < 0
            if np.any(neg):
                t = min(1.0, 0.99 * float(np.min(-h[neg] / dh[neg])))
            merit = r @ r
            for _ in range(50):
                ht, nut = h + t * dh, nu + t * step[n:]
                qt = P @ ht
                rt = np.concatenate((divergences(P, qt) - 1.0 + mu / ht + A.T @ nut, A @ ht - b))
                if np.all(ht > 0) and rt @ rt <= (1 - 1e-4 * t) * merit:
                    break
                t *= 0.5
            else:
                break
            h, nu = ht, nut
    return tuple(int(i) for i in np.flatnonzero(h < 1e-6 * h.max()))


# -- candidate evaluation ----------------------------------------------------

def _slack_normalized(c: LinearConstraint, h: np.ndarray) -> float:
    nc = normalize(c)
    return float(nc.coeffs @ h - nc.bound)


def _check_candidate(ch: Channel, cs: ConstraintSet, S: tuple, h: np.ndarray,
                     lambda0: float, lam: np.ndarray, opts: SolverOptions) -> str:
    """Empty string if ``(h, lambda)`` is a valid KKT point, else the reason."""
    tol = opts.activity_tol
    for k in S:
        if cs[k].relation is not Relation.EQUAL and lam[k] < -opts.dual_tol:
            return f"multiplier of {cs[k].name or f'C{k + 1}'} is negative ({lam[k]:.6g})"
    for k, c in enumerate(cs):
        if k in S:
            continue
        if _slack_normalized(c, h) < -tol:
            return f"inactive constraint {c.name or f'C{k + 1}'} is violated"
    if np.min(h) < -tol:
        return "negative probability"
    r = stationarity_residuals(ch, h, lambda0, lam, cs)
    pos = h > 0
    if np.any(pos) and np.max(np.abs(r[pos])) > max(1e-8, 100 * opts.residual_tol):
        return "stationarity residual too large after clamping"
    if np.any(~pos) and np.max(r[~pos]) > 1e-8:
        return "a zero-probability secret would increase the leakage"
    return ""


def _candidate(ch, cs, S, system, res, opts, info) -> KktSolution:
    n = ch.n_inputs
    ns = len(system.support)
    h = np.zeros(n)
    h[list(system.support)] = res.x[:ns]
    lambda0 = float(res.x[ns])
    lam = np.zeros(len(cs))
    lam[list(system.active)] = res.x[ns + 1:]
    h_clamped = np.clip(h, 0.0, None)
    h_clamped /= h_clamped.sum()
    reason = ""
    dropped = [k for k in S if k not in system.active]
    if dropped:
        if any(abs(_slack_normalized(cs[k], h_clamped)) > opts.activity_tol for k in dropped):
            reason = "dependent active constraints are inconsistent"
        else:
            fit = _fit_multipliers(ch, cs, S, h_clamped, system.support)
            if fit is None:
                reason = "no admissible multipliers for the degenerate active set"
            else:
                lambda0, lam = fit
    reason = reason or _check_candidate(ch, cs, S, h_clamped, lambda0, lam, opts)
    r = stationarity_residuals(ch, h_clamped, lambda0, lam, cs)
    pos = h_clamped > 0
    cap_bits = mutual_information(ch, h_clamped)
    if not reason:
        ident = capacity_from_multipliers(h_clamped, lambda0, lam, cs)
        if abs(ident - cap_bits) > opts.crosscheck_tol:
            reason = f"capacity identity mismatch ({ident:.10g} vs {cap_bits:.10g} bits)"
    diag = Diagnostics(
        max_residual=float(np.max(np.abs(r[pos]))) if np.any(pos) else float("nan"),
        iterations=info["iterations"],
        restarts=info["restarts"],
        zero_set=tuple(i for i in range(n) if i not in system.support),
        messages=tuple(info.get("messages", ()))
        + (("dependent active constraints reduced to an independent subset",) if dropped else ()),
    )
    h_out = h if reason else h_clamped
    h_out.setflags(write=False)
    lam.setflags(write=False)
    return KktSolution(
        h_star=h_out, lambda0=lambda0, lambdas=lam, active_set=tuple(S),
        capacity_bits=cap_bits, capacity_nats=cap_bits / NATS_TO_BITS,
        status=Status.EXACT, diagnostics=diag, valid=not reason, reason=reason,
    )


def _failure(n, m, S, reason, info=None) -> KktSolution:
    info = info or {}
    return KktSolution(
        h_star=None, lambda0=float("nan"), lambdas=np.zeros(m), active_set=tuple(S),
        capacity_bits=float("nan"), capacity_nats=float("nan"),
        status=Status.NO_VALID_STATIONARY_POINT,
        diagnostics=Diagnostics(iterations=info.get("iterations", 0),
                                restarts=info.get("restarts", 0),
                                messages=tuple(info.get("messages", ()))),
        valid=False, reason=reason,
    )


def _dependent(system: KktSystem) -> bool:
    A = system.blocks()[1]
    return np.linalg.matrix_rank(A) < A.shape[0]


def _independent_rows(system: KktSystem) -> tuple:
    """Active constraints whose rows on the support, with the simplex row, are independent."""
    A = system.blocks()[1]
    rows, keep = A[:1], []
    for j, k in enumerate(system.active):
        trial = np.vstack((rows, A[1 + j]))
        if np.linalg.matrix_rank(trial) > rows.shape[0]:
            rows, keep = trial, keep + [k]
    return tuple(keep)


def _fit_multipliers(ch: Channel, cs: ConstraintSet, S: tuple, h: np.ndarray, support: tuple):
    """Multipliers for a degenerate active set at a fixed ``h``.

    Stationarity on the support fixes the multipliers only up to a null space;
    within it a linear program looks for nonnegative inequality multipliers
    and nonpositive residuals on the zero set.  Returns ``(lambda0, lambdas)``
    or ``None``.
    """
    n = ch.n_inputs
    F = _fmatrix(cs, n)
    M = np.column_stack([np.ones(n)] + [F[:, k] for k in S])
    d = divergences(ch.phi, ch.phi @ h) - 1.0
    sup = list(support)
    zero = [i for i in range(n) if i not in support]
    if not np.all(np.isfinite(d)):
        return None
    Ms = M[sup]
    nu, *_ = np.linalg.lstsq(Ms, -d[sup], rcond=None)
    if np.max(np.abs(Ms @ nu + d[sup])) > 1e-10:
        return None
    _, sv, vt = np.linalg.svd(Ms)
    N = vt[int(np.sum(sv > 1e-10 * sv.max())):].T
    ineq = [1 + j for j, k in enumerate(S) if cs[k].relation is not Relation.EQUAL]
    # maximize a common margin t on the zero-set residuals and inequality multipliers
    rows = [np.append(M[i] @ N, 1.0) for i in zero] + [np.append(-N[j], 1.0) for j in ineq]
    rhs = [-(d[i] + M[i] @ nu) for i in zero] + [nu[j] for j in ineq]
    if N.shape[1] and rows:
        p = N.shape[1]
        c = np.zeros(p + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                      bounds=[(None, None)] * p + [(None, 1.0)], method="highs")
        if res.status != 0:
            return None
        nu = nu + N @ res.x[:p]
    lam = np.zeros(len(cs))
    lam[list(S)] = nu[1:]
    return float(nu[0]), lam


def _solve_support(ch, cs, S, support, opts, rng, restarts=True, h_init=None):
    F = _fmatrix(cs, ch.n_inputs)
    system = KktSystem(ch.phi, F, cs.bounds() if len(cs) else np.zeros(0), tuple(S), tuple(support))
    if _dependent(system):
        system = replace(system, active=_independent_rows(system))
    o = opts if restarts else replace(opts, restarts=0)
    res, used, its = _solve_system(system, o, rng, h_init)
    return res, system, {"iterations": its, "restarts": used}


def solve_for_active_set(ch: Channel, cs, S, opts: SolverOptions | None = None,
                         h_init=None) -> KktSolution:
    """Solve the KKT system with the constraints in ``S`` binding.

    The result is a candidate: ``valid`` is False (with ``reason``) when a
    multiplier of an inequality in ``S`` is negative, an inactive constraint
    is violated, or no stationary point was found.  When no interior
    stationary point exists the support is searched: first a log-barrier
    estimate of the zero set, then enumeration of zero sets by size.
    """
    opts = opts or SolverOptions()
    cs = _oriented(cs)
    cs.check_size(ch.n_inputs)
    S = tuple(sorted(S))
    missing = [k for k, c in enumerate(cs) if c.relation is Relation.EQUAL and k not in S]
    if missing:
        raise SolverError(f"equality constraints {missing} must be in the active set")
    n, m = ch.n_inputs, len(cs)
    rng = np.random.default_rng(opts.seed)
    messages = []

    full = tuple(range(n))
    res, system, info = _solve_support(ch, cs, S, full, opts, rng, h_init=h_init)
    if res.converged:
        return _candidate(ch, cs, S, system, res, opts, info)
    messages.append(f"interior Newton failed ({res.reason})")
    total_it, total_restarts = info["iterations"], info["restarts"]

    def attempt(zero):
        nonlocal total_it
        support = tuple(i for i in full if i not in zero)
        if not support:
            return None
        r, sysz, inf = _solve_support(ch, cs, S, support, opts, rng, restarts=False)
        total_it += inf["iterations"]
        if not r.converged:
            return None
        inf = {"iterations": total_it, "restarts": total_restarts, "messages": messages}
        return _candidate(ch, cs, S, sysz, r, opts, inf)

    guess = _barrier_support(system)
    tried = set()
    best_invalid = None
    if guess:
        tried.add(guess)
        cand = attempt(guess)
        if cand is not None:
            if cand.valid:
                return cand
            best_invalid = cand
    if n <= opts.support_enum_limit:
        for size in range(1, n):
            for zero in itertools.combinations(full, size):
                if zero in tried:
                    continue
                cand = attempt(zero)
                if cand is None:
                    continue
                if cand.valid:
                    return cand
                # a negative multiplier is a property of S, not of the support
                if cand.reason.startswith("multiplier") and best_invalid is None:
                    best_invalid = cand
    else:
        messages.append(f"support enumeration skipped (n = {n} > {opts.support_enum_limit})")
    if best_invalid is not None:
        return best_invalid
    return _failure(n, m, S, "no stationary point found",
                    {"iterations": total_it, "restarts": total_restarts, "messages": messages})


# -- driver -----------------------------------------------------------------

def feasible_point(cs, n: int):
    """A point satisfying every constraint's closure, or ``None``.

    Strict constraints must additionally admit positive slack.
    """
    cs = _oriented(cs)
    if not len(cs):
        return np.full(n, 1.0 / n)
    A_eq, b_eq, A_ub, b_ub, strict = [np.ones(n)], [1.0], [], [], []
    for c in cs:
        nc = normalize(c)
        if nc.relation is Relation.EQUAL:
            A_eq.append(nc.coeffs)
            b_eq.append(nc.bound)
        else:
            A_ub.append(-nc.coeffs)
            b_ub.append(-nc.bound)
            strict.append(nc.relation is Relation.STRICTLY_GREATER)
    # maximize a common slack t on the strict rows
    c_obj = np.zeros(n + 1)
    c_obj[-1] = -1.0
    A_eq_m = np.hstack((np.array(A_eq), np.zeros((len(A_eq), 1))))
    if A_ub:
        A_ub_m = np.hstack((np.array(A_ub), np.array(strict, dtype=float)[:, None]))
        b_ub_m = np.array(b_ub)
    else:
        A_ub_m, b_ub_m = None, None
    bounds = [(0, None)] * n + [(0, 1)]
    res = linprog(c_obj, A_ub=A_ub_m, b_ub=b_ub_m, A_eq=A_eq_m, b_eq=np.array(b_eq),
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    if any(strict) and res.x[-1] <= 1e-12:
        return None
    return res.x[:n]


def _deterministic_unconstrained(ch: Channel) -> KktSolution:
    reach = ch.reachable_outputs()
    k = reach.size
    h = np.zeros(ch.n_inputs)
    for s in reach:
        pre = np.flatnonzero(ch.phi[s] == 1.0)
        h[pre] = 1.0 / (k * pre.size)
    lambda0 = 1.0 - np.log(k)
    r = stationarity_residuals(ch, h, lambda0)
    h.setflags(write=False)
    cap = float(np.log2(k))
    return KktSolution(
        h_star=h, lambda0=float(lambda0), lambdas=np.zeros(0), active_set=(),
        capacity_bits=cap, capacity_nats=float(np.log(k)), status=Status.EXACT,
        diagnostics=Diagnostics(max_residual=float(np.max(np.abs(r)))),
    )


def active_set_order(cs: ConstraintSet):
    """Candidate active sets: equalities always, inequalities by subset size."""
    eq = [k for k, c in enumerate(cs) if c.relation is Relation.EQUAL]
    ineq = [k for k, c in enumerate(cs) if c.relation is not Relation.EQUAL]
    for size in range(len(ineq) + 1):
        for sub in itertools.combinations(ineq, size):
            yield tuple(sorted(eq + list(sub)))


def _on_strict_boundary(cs: ConstraintSet, h, tol: float) -> list:
    return [k for k, c in enumerate(cs) if c.is_strict and _slack_normalized(c, h) <= tol]


def _finalize(ch: Channel, cs: ConstraintSet, sol: KktSolution, opts: SolverOptions) -> KktSolution:
    """Set EXACT/APPROXIMATE; the latter when a strict constraint holds with equality.

    A strict constraint can sit on its boundary with a zero multiplier even
    though equally good priors exist strictly inside (flat optima).  Newton is
    then restarted from a point pulled into the strict interior to look for one.
    """
    boundary = _on_strict_boundary(cs, sol.h_star, opts.activity_tol)
    if boundary and not set(boundary) & set(sol.active_set):
        inner = feasible_point(cs, ch.n_inputs)
        if inner is not None:
            start = 0.5 * (np.asarray(sol.h_star) + inner)
            start = 0.5 * start + 0.5 * np.full(ch.n_inputs, 1.0 / ch.n_inputs) \
                if np.min(start) <= 0 else start
            alt = solve_for_active_set(ch, cs, sol.active_set, replace(opts, restarts=0), h_init=start)
            if (alt.valid and alt.capacity_bits >= sol.capacity_bits - 1e-9
                    and not _on_strict_boundary(cs, alt.h_star, opts.activity_tol)):
                diag = replace(alt.diagnostics, candidates_tried=sol.diagnostics.candidates_tried,
                               messages=sol.diagnostics.messages)
                return replace(alt, status=Status.EXACT, diagnostics=diag)
    return replace(sol, status=Status.APPROXIMATE if boundary else Status.EXACT)


def solve(ch: Channel, cs=None, opts: SolverOptions | None = None) -> KktSolution:
    """Channel capacity of ``ch`` under the constraints ``cs``.

    Returns the best valid KKT candidate over all active sets.  The status is
    ``APPROXIMATE`` when a strict inequality binds at the optimum (the value
    is then a supremum), ``INFEASIBLE`` when no prior satisfies the
    constraints and ``NO_VALID_STATIONARY_POINT`` when every candidate was
    rejected.
    """
    opts = opts or SolverOptions()
    cs = _oriented(cs)
    n, m = ch.n_inputs, len(cs)
    cs.check_size(n)
    n_ineq = sum(c.relation is not Relation.EQUAL for c in cs)
    if n_ineq > opts.enumeration_limit:
        raise SolverError(f"{n_ineq} inequality constraints exceed the enumeration limit "
                          f"of {opts.enumeration_limit}")
    if feasible_point(cs, n) is None:
        sol = _failure(n, m, (), "constraint set is infeasible")
        return replace(sol, status=Status.INFEASIBLE)
    if m == 0 and ch.is_deterministic():
        return _deterministic_unconstrained(ch)

    valid, rejected, tried = [], [], 0
    for S in active_set_order(cs):
        tried += 1
        cand = solve_for_active_set(ch, cs, S, opts)
        log.debug("active set %s: valid=%s %s", S, cand.valid, cand.reason)
        if cand.valid:
            valid.append(cand)
            if opts.first_valid:
                break
        else:
            rejected.append(f"{S}: {cand.reason}")
    if not valid:
        fallback = _oracle_fallback(ch, cs, opts, rejected)
        if fallback is not None:
            return fallback
        sol = _failure(n, m, (), "every active set was rejected", {"messages": rejected})
        return replace(sol, diagnostics=replace(sol.diagnostics, candidates_tried=tried))
    best_cap = max(c.capacity_bits for c in valid)
    ties = [c for c in valid if c.capacity_bits >= best_cap - 1e-9]
    ties.sort(key=lambda c: (len(c.active_set), tuple(c.h_star)))
    best = ties[0]
    diag = replace(best.diagnostics, candidates_tried=tried,
                   messages=best.diagnostics.messages + tuple(rejected))
    return _finalize(ch, cs, replace(best, diagnostics=diag), opts)


def _oracle_fallback(ch, cs, opts, rejected):
    if ch.n_inputs <= opts.support_enum_limit:
        return None
    from .oracle import blahut_arimoto, constrained_brute_force

    if len(cs) == 0:
        res = blahut_arimoto(ch, tol=1e-9)
    else:
        res = constrained_brute_force(ch, cs, mode="ascent", seed=opts.seed)
    if res.argmax is None:
        return None
    h = np.asarray(res.argmax, dtype=float)
    h.setflags(write=False)
    return KktSolution(
        h_star=h, lambda0=float("nan"), lambdas=np.full(len(cs), np.nan), active_set=(),
        capacity_bits=res.capacity_bits, capacity_nats=res.capacity_bits / NATS_TO_BITS,
        status=Status.APPROXIMATE,
        diagnostics=Diagnostics(oracle_fallback=True,
                                messages=tuple(rejected) + ("numerical oracle used",)),
    )


# -- reporting ----------------------------------------------------------------

@dataclass(frozen=True)
class LeakageReport:
    capacity_bits: float
    capacity_nats: float
    entropy_bits: float
    ratio_percent: float | None
    h_star: tuple
    lambda0: float
    lambdas: tuple
    active_set: tuple
    status: Status


def leakage_report(ch: Channel, solution: KktSolution) -> LeakageReport:
    """Capacity together with the prior's entropy and the leaked fraction."""
    if not solution.ok:
        raise SolverError(f"cannot report on a {solution.status.value} solution")
    H = entropy(solution.h_star)
    ratio = None if H <= 1e-12 else 100.0 * solution.capacity_bits / H
    return LeakageReport(
        capacity_bits=solution.capacity_bits,
        capacity_nats=solution.capacity_nats,
        entropy_bits=H,
        ratio_percent=ratio,
        h_star=tuple(float(x) for x in solution.h_star),
        lambda0=solution.lambda0,
        lambdas=tuple(float(x) for x in solution.lambdas),
        active_set=solution.active_set,
        status=solution.status,
    )


__all__ = [
    "Status", "SolverOptions", "Diagnostics", "KktSolution", "KktSystem", "LeakageReport",
    "SolverError", "DomainError", "ConstraintError",
    "stationarity_residual", "stationarity_residuals", "capacity_from_multipliers",
    "solve_for_active_set", "solve", "feasible_point", "active_set_order", "leakage_report",
]
