"""Strict inequalities: when the supremum is approached but never attained.

A strict constraint that binds at the optimum cannot hold there, so the
solver reports the value of its closure and flags the status approximate.
Tightening the closure by a small margin shows the limit being approached.
"""

from leakcap import constraint, feasibility, network_channel, onion_example_network, solve

ch = network_channel(onion_example_network())
strict = constraint((1, -100, 0, 0), ">", name="h1 > 100 h2")
sol = solve(ch, [strict])
print(f"closure optimum: {sol.capacity_bits:.6f} bits, status {sol.status.value}")
print("strict constraint at h*:", feasibility([strict], sol.h_star)[0])

for eps in (1e-2, 1e-3, 1e-4, 1e-5):
    tight = constraint((1, -100, 0, 0), ">=", eps)
    s = solve(ch, [tight])
    print(f"h1 - 100 h2 >= {eps:g}: {s.capacity_bits:.6f} bits ({s.status.value})")

# a strict constraint that does not bind leaves the result exact
loose = constraint((1, -1, 0, 0), ">", name="h1 > h2")
print("\nh1 > h2:", solve(ch, [loose]).status.value)
