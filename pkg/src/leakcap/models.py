"""Builders turning concrete systems into leakage channels.

Two families are provided: the nested two-thread program whose output bit
leaks the parity of the secret, and onion-routing networks observed by a
single compromised relay.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .channel import Channel


class ModelError(ValueError):
    pass


# -- threaded program --------------------------------------------------------

@dataclass(frozen=True)
class ThreadedProgramParams:
    """``p``: outer thread runs ``l = h % 2`` first; ``q``: inner thread runs ``l = 0`` first."""

    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ModelError(f"{name} must lie in [0, 1], got {v!r}")

    def odd_zero(self):
        p, q = self.p, self.q
        return p * (1 - q) + (1 - p) * (1 - q) * p

    def even_zero(self):
        p, q = self.p, self.q
        return 1 - p * q - (1 - p) * p * q


def threaded_program_table(params: ThreadedProgramParams):
    """Row-major table ``[[P(0|odd), P(1|odd)], [P(0|even), P(1|even)]]``.

    Exact when ``p`` and ``q`` are :class:`fractions.Fraction`.
    """
    a, b = params.odd_zero(), params.even_zero()
    return [[a, 1 - a], [b, 1 - b]]


def threaded_program_channel(params: ThreadedProgramParams) -> Channel:
    rows = [[float(x) for x in r] for r in threaded_program_table(params)]
    return Channel.from_rows(rows, ("h_odd", "h_even"), ("0", "1"))


# -- onion routing -----------------------------------------------------------

NOBODY = "N"


@dataclass(frozen=True)
class NetworkModel:
    """Relay network with one receiver and one compromised node.

    ``edges`` are pairs of node names; with ``directed=False`` each pair is
    usable both ways.
    """

    nodes: tuple
    edges: tuple
    receiver: str
    adversary: str
    senders: tuple
    directed: bool = False

    def __post_init__(self):
        nodes = tuple(str(n) for n in self.nodes)
        edges = tuple((str(a), str(b)) for a, b in self.edges)
        senders = tuple(str(s) for s in self.senders)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "senders", senders)
        object.__setattr__(self, "receiver", str(self.receiver))
        object.__setattr__(self, "adversary", str(self.adversary))
        known = set(nodes)
        if len(known) != len(nodes):
            raise ModelError("duplicate node names")
        for a, b in edges:
            if a not in known or b not in known:
                raise ModelError(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise ModelError(f"self-loop on node {a}")
        if self.receiver not in known:
            raise ModelError(f"receiver {self.receiver!r} is not a node")
        if self.adversary not in known:
            raise ModelError(f"adversary {self.adversary!r} is not a node")
        if not senders:
            raise ModelError("at least one sender is required")
        if self.receiver in senders:
            raise ModelError("the receiver cannot be a sender")
        for s in senders:
            if s not in known:
                raise ModelError(f"sender {s!r} is not a node")
        if len(set(senders)) != len(senders):
            raise ModelError("duplicate senders")

    def neighbours(self) -> dict:
        adj = {n: [] for n in self.nodes}
        for a, b in self.edges:
            if b not in adj[a]:
                adj[a].append(b)
            if not self.directed and a not in adj[b]:
                adj[b].append(a)
        return adj


@dataclass(frozen=True)
class PathRow:
    path: tuple
    observation: str
    probability: Fraction


@dataclass
class PathTable:
    """Per-sender ``(path, observation, probability)`` rows."""

    rows: dict = field(default_factory=dict)

    def __getitem__(self, sender):
        return self.rows[sender]

    def __iter__(self):
        return iter(self.rows)

    def items(self):
        return self.rows.items()

    def observations(self) -> list:
        """Distinct observation labels in first-occurrence order."""
        seen = []
        for rows in self.rows.values():
            for r in rows:
                if r.observation not in seen:
                    seen.append(r.observation)
        return seen

    def as_matrix(self) -> dict:
        """``{sender: {observation: probability}}`` with exact probabilities."""
        out = {}
        for s, rows in self.rows.items():
            acc = defaultdict(Fraction)
            for r in rows:
                acc[r.observation] += r.probability
            out[s] = dict(acc)
        return out


def simple_paths(adj: Mapping[str, Sequence[str]], source: str, target: str) -> list:
    """All simple ``source -> target`` paths (depth-first, neighbour order)."""
    found = []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        for nxt in reversed(adj.get(node, ())):
            if nxt in path:
                continue
            if nxt == target:
                found.append(tuple(path + [nxt]))
            else:
                stack.append((nxt, path + [nxt]))
    return found


def admissible_paths(net: NetworkModel, sender: str) -> list:
    """Simple paths to the receiver, excluding the direct hop, shortest first."""
    paths = [p for p in simple_paths(net.neighbours(), sender, net.receiver) if len(p) > 2]
    paths.sort(key=lambda p: (len(p), p))
    return paths


def fmt_observation(prev: str, nxt: str) -> str:
    return f"({prev}, {nxt})"


def default_observer(net: NetworkModel, path: Sequence[str]) -> str:
    """Predecessor and successor of the adversary on ``path``.

    ``(N, N)`` when the adversary is not on the path.  When the adversary is
    itself the sender the label is ``(N, <receiver>)``: it has no predecessor
    and its own traffic is recorded as bound for the receiver.
    """
    adv = net.adversary
    if adv not in path:
        return fmt_observation(NOBODY, NOBODY)
    k = path.index(adv)
    if k == 0:
        return fmt_observation(NOBODY, net.receiver)
    if k == len(path) - 1:
        return fmt_observation(path[k - 1], NOBODY)
    return fmt_observation(path[k - 1], path[k + 1])


Observer = Callable[[NetworkModel, Sequence[str]], str]


def observe(net: NetworkModel, path: Sequence[str], observer: Observer = default_observer) -> str:
    return observer(net, tuple(path))


def enumerate_paths(net: NetworkModel, sender: str, observer: Observer = default_observer,
                    weights: Mapping[tuple, float] | None = None) -> list:
    """Rows for one sender; paths are equally likely unless ``weights`` is given."""
    sender = str(sender)
    if sender not in net.senders:
        raise ModelError(f"{sender!r} is not a sender")
    paths = admissible_paths(net, sender)
    if not paths:
        raise ModelError(f"sender {sender!r} has no admissible path to {net.receiver!r}")
    if weights is None:
        probs = [Fraction(1, len(paths))] * len(paths)
    else:
        raw = [Fraction(weights.get(tuple(p), 0)) for p in paths]
        total = sum(raw)
        if total <= 0 or any(w < 0 for w in raw):
            raise ModelError(f"invalid path weights for sender {sender!r}")
        probs = [w / total for w in raw]
    return [PathRow(p, observe(net, p, observer), pr) for p, pr in zip(paths, probs)]


def path_table(net: NetworkModel, observer: Observer = default_observer,
               weights: Mapping[str, Mapping[tuple, float]] | None = None) -> PathTable:
    weights = weights or {}
    return PathTable({s: enumerate_paths(net, s, observer, weights.get(s)) for s in net.senders})


def network_channel(net: NetworkModel, observer: Observer = default_observer,
                    weights: Mapping[str, Mapping[tuple, float]] | None = None) -> Channel:
    """Channel with the senders as secrets and observation labels as outputs."""
    table = path_table(net, observer, weights)
    obs = table.observations()
    mat = table.as_matrix()
    rows = [[float(mat[s].get(o, 0)) for o in obs] for s in net.senders]
    return Channel.from_rows(rows, [f"h{s}" if s[:1].isdigit() else s for s in net.senders], obs)


def onion_example_network() -> NetworkModel:
    """Four-relay example network: node 3 compromised, ``R`` the receiver.

    The links are directed.  Read both ways they would let node 4 route via 2
    and node 3 via 4, adding circuits the example does not allow.
    """
    return NetworkModel(
        nodes=("1", "2", "3", "4", "R"),
        edges=(("1", "2"), ("2", "3"), ("3", "2"), ("2", "4"), ("4", "3"),
               ("2", "R"), ("3", "R")),
        receiver="R",
        adversary="3",
        senders=("1", "2", "3", "4"),
        directed=True,
    )
