"""An onion-routing network watched by one compromised relay.

Node 3 reports the predecessor and successor of every message it forwards.
The senders are the secret; the question is how much the relay learns about
who is talking under different beliefs about sender activity.
"""

from leakcap import constraint, onion_example_network, leakage_report, network_channel, solve
from leakcap.models import path_table

net = onion_example_network()
for sender, rows in path_table(net).items():
    for r in rows:
        print(f"h{sender}  {' -> '.join(r.path):<22} {r.observation:<7} {r.probability}")

ch = network_channel(net)
print("\nobservations:", ", ".join(ch.output_labels))

scenarios = [
    ("no prior knowledge", []),
    ("sender 1 at least as active as sender 2", [constraint((1, -1, 0, 0), ">=")]),
    ("sender 1 over 100 times as active as sender 2", [constraint((1, -100, 0, 0), ">")]),
]
for title, cs in scenarios:
    sol = solve(ch, cs)
    rep = leakage_report(ch, sol)
    prior = ", ".join(f"{x:.4f}" for x in rep.h_star)
    print(f"\n{title}")
    print(f"  h* = ({prior})")
    print(f"  capacity {rep.capacity_bits:.4f} bits of H(h*) = {rep.entropy_bits:.4f} bits"
          f" -> {rep.ratio_percent:.1f}% leaked, status {sol.status.value}")
