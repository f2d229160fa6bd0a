"""Cross-checking the KKT solver against two independent numerical methods.

Unconstrained capacities are compared with Blahut-Arimoto, constrained ones
with a simplex grid scan polished by projected gradient ascent.
"""

import numpy as np

from leakcap import Channel, constraint, solve
from leakcap.oracle import blahut_arimoto, constrained_brute_force

rng = np.random.default_rng(2024)

worst = 0.0
for _ in range(25):
    n, m = rng.integers(2, 7, size=2)
    ch = Channel.from_rows(rng.dirichlet(np.ones(m), size=n))
    worst = max(worst, abs(solve(ch).capacity_bits - blahut_arimoto(ch).capacity_bits))
print(f"25 unconstrained channels, largest gap to Blahut-Arimoto: {worst:.2e} bits")

worst = 0.0
for k in range(25):
    ch = Channel.from_rows(rng.dirichlet(np.ones(4), size=3))
    f = rng.normal(size=3)
    cs = [constraint(f, ">=", float(f @ rng.dirichlet(np.ones(3))))]
    sol = solve(ch, cs)
    ref = constrained_brute_force(ch, cs, seed=k)
    worst = max(worst, abs(sol.capacity_bits - ref.capacity_bits))
print(f"25 constrained channels, largest gap to the grid oracle: {worst:.2e} bits")

# constraints can only lower the capacity
ch = Channel.from_rows([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]])
free = solve(ch).capacity_bits
bound = solve(ch, [constraint((0, 0, 1), ">=", 0.5)]).capacity_bits
print(f"free {free:.4f} bits, with h3 >= 0.5: {bound:.4f} bits")
