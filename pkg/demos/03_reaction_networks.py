"""Michaelis-Menten kinetics with mass action, then a small cycle.

Enzyme kinetics conserves the enzyme total and the substrate total along
any trajectory.  The cycle A -> B -> C -> A with an extra B -> A reaction
settles at a complex balanced equilibrium, and the relative information to
it falls monotonically.
"""
import numpy as np

from relinfo.numcore import integrate, worst_increase
from relinfo.reactnet import (
    conservation_laws,
    find_equilibrium,
    format_conservation_law,
    is_complex_balanced,
    michaelis_menten,
    parse_network,
    population_info_monitor,
    rate_field,
    to_markov,
)

mm = michaelis_menten(alpha=0.5, beta=0.3, gamma=0.1)
print("species:", mm.species)
for law in conservation_laws(mm):
    print("conserved:", format_conservation_law(law, mm.species))

P0 = np.array([1.0, 2.0, 0.0, 0.0])
traj = integrate(rate_field(mm), P0, 100.0)
print("state at t=100:", np.round(traj.final, 6))
drift = np.abs(traj.states @ conservation_laws(mm).T - conservation_laws(mm) @ P0).max()
print(f"largest drift of the conserved totals: {drift:.1e}")

tri = parse_network("A -> B : 1\nB -> C : 2\nC -> A : 3\nB -> A : 0.5\n")
Q = find_equilibrium(tri, np.array([1.0, 1.0, 1.0]))
report = is_complex_balanced(tri, Q)
print("\ntriangle equilibrium:", np.round(Q, 6), "complex balanced:", report.balanced)

traj = integrate(rate_field(tri), np.array([3.0, 0.0, 0.0]), 10.0,
                 monitors={"I": population_info_monitor(Q)})
info = traj.channels["I"]
print(f"I(P,Q): {info[0]:.4f} -> {info[-1]:.2e}, worst rise {worst_increase(info):.1e}")

# the same network read as a single-particle Markov chain
M = to_markov(tri)
print("as a Markov process:", M.states, "with", int(M.adjacency().sum()), "edges")
