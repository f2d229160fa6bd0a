"""Information leakage channels and the quantities computed from them.

A channel maps each secret ``h_i`` to a distribution over observations.  The
matrix is stored column-per-secret: ``phi[j, i] = P(O = o_j | h = h_i)``, so
``phi`` has shape ``(n_outputs, n_inputs)`` and every column sums to one.

Information quantities are computed in nats internally; the public
functions return bits unless the name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Factor converting nats to bits (``1 / ln 2``).
NATS_TO_BITS = 1.0 / math.log(2.0)

STOCHASTIC_TOL = 1e-12
RENORMALIZE_LIMIT = 1e-9


class ChannelError(ValueError):
    """Raised for malformed channels, priors or mismatched dimensions."""


def nats_to_bits(x):
    return x * NATS_TO_BITS


def bits_to_nats(x):
    return x / NATS_TO_BITS


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _check_labels(labels, what):
    labels = tuple(str(x) for x in labels)
    if len(set(labels)) != len(labels):
        raise ChannelError(f"duplicate {what} labels: {labels}")
    return labels


@dataclass(frozen=True, eq=False)
class Channel:
    """Leakage channel ``<H, O, phi>``.

    Use :meth:`from_rows` to build from the usual table layout where each row
    is a secret.  Columns deviating from one by less than ``1e-9`` are
    renormalized; larger deviations are rejected.
    """

    input_labels: tuple
    output_labels: tuple
    phi: np.ndarray

    def __post_init__(self):
        inputs = _check_labels(self.input_labels, "input")
        outputs = _check_labels(self.output_labels, "output")
        phi = np.array(self.phi, dtype=float)
        if phi.shape != (len(outputs), len(inputs)):
            raise ChannelError(
                f"matrix shape {phi.shape} does not match "
                f"{len(outputs)} outputs x {len(inputs)} inputs"
            )
        if not np.all(np.isfinite(phi)):
            raise ChannelError("matrix contains non-finite entries")
        if phi.min(initial=0.0) < 0.0 or phi.max(initial=0.0) > 1.0:
            raise ChannelError("matrix entries must lie in [0, 1]")
        sums = phi.sum(axis=0)
        dev = np.abs(sums - 1.0)
        if np.any(dev > RENORMALIZE_LIMIT):
            i = int(np.argmax(dev))
            raise ChannelError(
                f"distribution for secret {inputs[i]!r} sums to {sums[i]!r}, expected 1"
            )
        if np.any(dev > STOCHASTIC_TOL):
            phi = phi / sums
        object.__setattr__(self, "input_labels", inputs)
        object.__setattr__(self, "output_labels", outputs)
        object.__setattr__(self, "phi", _frozen(phi))

    @classmethod
    def from_rows(cls, rows, input_labels=None, output_labels=None) -> "Channel":
        """Build from a row-major table (one row per secret)."""
        table = np.asarray(rows, dtype=float)
        if table.ndim != 2:
            raise ChannelError("expected a 2-d table")
        n, m = table.shape
        if input_labels is None:
            input_labels = [f"h{i + 1}" for i in range(n)]
        if output_labels is None:
            output_labels = [f"o{j + 1}" for j in range(m)]
        return cls(tuple(input_labels), tuple(output_labels), table.T)

    @property
    def n_inputs(self) -> int:
        return self.phi.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.phi.shape[0]

    def rows(self) -> np.ndarray:
        """Row-major view (secrets as rows)."""
        return self.phi.T

    def is_deterministic(self) -> bool:
        return bool(np.all((self.phi == 0.0) | (self.phi == 1.0)))

    def support(self, i: int) -> np.ndarray:
        """Indices of observations possible for secret ``i``."""
        return np.flatnonzero(self.phi[:, i] > 0.0)

    def reachable_outputs(self) -> np.ndarray:
        return np.flatnonzero(self.phi.sum(axis=1) > 0.0)

    def input_index(self, label) -> int:
        try:
            return self.input_labels.index(str(label))
        except ValueError:
            raise ChannelError(
                f"unknown secret {label!r}; valid labels are {list(self.input_labels)}"
            ) from None

    def permuted(self, order: Sequence[int]) -> "Channel":
        """Channel with inputs reordered as ``order``."""
        order = list(order)
        return Channel(
            tuple(self.input_labels[i] for i in order),
            self.output_labels,
            self.phi[:, order],
        )

    def __repr__(self):
        return f"Channel({self.n_inputs} inputs x {self.n_outputs} outputs)"


@dataclass(frozen=True, eq=False)
class Prior:
    """Probability distribution over secrets."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).ravel()
        if p.size == 0 or not np.all(np.isfinite(p)):
            raise ChannelError("prior must be a non-empty finite vector")
        if p.min() < 0.0:
            raise ChannelError(f"prior has a negative entry {p.min()!r}")
        s = p.sum()
        if abs(s - 1.0) > RENORMALIZE_LIMIT:
            raise ChannelError(f"prior sums to {s!r}, expected 1")
        if abs(s - 1.0) > STOCHASTIC_TOL:
            p = p / s
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def uniform(cls, n: int) -> "Prior":
        return cls(np.full(n, 1.0 / n))

    def __len__(self):
        return self.p.size

    def __array__(self, dtype=None, copy=None):
        return self.p if dtype is None else self.p.astype(dtype)


@dataclass(frozen=True, eq=False)
class OutputDistribution:
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.min(initial=0.0) < 0.0 or abs(q.sum() - 1.0) > 1e-10:
            raise ChannelError("output distribution is not a probability vector")
        object.__setattr__(self, "q", _frozen(q))

    def __len__(self):
        return self.q.size

    def __array__(self, dtype=None, copy=None):
        return self.q if dtype is None else self.q.astype(dtype)


def _as_vector(h) -> np.ndarray:
    if isinstance(h, Prior):
        return h.p
    return np.asarray(h, dtype=float)


def _check_dims(ch: Channel, h: np.ndarray):
    if h.shape != (ch.n_inputs,):
        raise ChannelError(
            f"prior has {h.size} entries but the channel has {ch.n_inputs} secrets"
        )


def output_distribution(ch: Channel, h) -> OutputDistribution:
    """``q[j] = sum_i phi[j, i] * h[i]``."""
    h = _as_vector(h)
    _check_dims(ch, h)
    q = ch.phi @ h
    return OutputDistribution(np.clip(q, 0.0, None))


def entropy_nats(h) -> float:
    p = _as_vector(h)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def entropy(h) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    return nats_to_bits(entropy_nats(h))


def divergences(phi: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Per-secret ``D_i = sum_s phi[s, i] ln(phi[s, i] / q[s])`` in nats.

    Entries with ``phi == 0`` contribute nothing.  If ``q[s] == 0`` where
    ``phi[s, i] > 0`` the result for that secret is ``+inf``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = phi * (np.log(phi) - np.log(q)[:, None])
    terms = np.where(phi > 0.0, terms, 0.0)
    return terms.sum(axis=0)


def mutual_information_nats(ch: Channel, h) -> float:
    h = _as_vector(h)
    _check_dims(ch, h)
    q = ch.phi @ h
    live = h > 0.0
    if not np.any(live):
        return 0.0
    d = divergences(ch.phi[:, live], q)
    return float(max(np.dot(h[live], d), 0.0))


def mutual_information(ch: Channel, h) -> float:
    """``I(h; O)`` in bits."""
    return nats_to_bits(mutual_information_nats(ch, h))
