"""Leakage of a two-thread program that writes the parity of a secret.

The outer thread races ``l = h % 2`` against an inner pair of threads, one of
which resets ``l`` to 0.  Scheduling probabilities p and q decide which
assignment wins, so the observed bit is a noisy copy of the parity.
"""

from fractions import Fraction

import numpy as np

from leakcap import ThreadedProgramParams, constraint, leakage_report, solve, threaded_program_channel
from leakcap.models import threaded_program_table
from leakcap.oracle import blahut_arimoto

third = Fraction(1, 3)
table = threaded_program_table(ThreadedProgramParams(third, third))
print("P(l = 0 | odd)  =", table[0][0])
print("P(l = 0 | even) =", table[1][0])

ch = threaded_program_channel(ThreadedProgramParams(1 / 3, 1 / 3))
odd_rarer = constraint((1, -1), "<", name="h_odd < h_even")
sol = solve(ch, [odd_rarer])
rep = leakage_report(ch, sol)
print(f"\nworst-case prior: h_odd={sol.h_star[0]:.4f}, h_even={sol.h_star[1]:.4f}")
print(f"lambda0 = {sol.lambda0:.4f}, constraint multiplier = {sol.lambdas[0]:.4f} (not binding)")
print(f"capacity = {rep.capacity_bits:.4f} bits = {rep.capacity_nats:.4f} nats ({sol.status.value})")
print(f"Blahut-Arimoto agrees: {blahut_arimoto(ch).capacity_bits:.4f} bits")

# sweep the outer scheduling probability; p = 1 makes the program secure
print("\n   p     capacity (bits)")
for p in np.linspace(0.0, 1.0, 6):
    c = solve(threaded_program_channel(ThreadedProgramParams(p, 1 / 3)), [odd_rarer])
    print(f"{p:5.2f}   {c.capacity_bits:.4f}")
