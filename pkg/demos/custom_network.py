"""Building a leakage channel for a network of your own.

Edges are undirected unless ``directed=True``.  Path weights replace the
uniform choice of route, and a custom observer changes what the compromised
node is assumed to see.
"""

from leakcap import NetworkModel, leakage_report, network_channel, solve
from leakcap.models import path_table

net = NetworkModel(
    nodes=("a", "b", "c", "m", "x", "R"),
    edges=(("a", "m"), ("b", "m"), ("c", "x"), ("m", "x"), ("m", "R"), ("x", "R")),
    receiver="R",
    adversary="x",
    senders=("a", "b", "c"),
)

for sender, rows in path_table(net).items():
    for r in rows:
        print(f"{sender}: {'-'.join(r.path):<12} {r.observation:<8} {r.probability}")


def report(title, ch):
    rep = leakage_report(ch, solve(ch))
    prior = ", ".join(f"{l}={x:.3f}" for l, x in zip(ch.input_labels, rep.h_star))
    print(f"{title}: {rep.capacity_bits:.4f} bits  ({prior})")


report("\npredecessor/successor observer", network_channel(net))

# a relay that only notices whether it carried the message at all
report("presence-only observer", network_channel(net, observer=lambda n, p: str(n.adversary in p)))

# senders prefer short routes
weights = {s: {p.path: 1.0 / len(p.path) ** 2 for p in path_table(net)[s]} for s in net.senders}
report("short routes preferred", network_channel(net, weights=weights))
