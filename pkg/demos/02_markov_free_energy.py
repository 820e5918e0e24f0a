"""A three-state chain relaxing to equilibrium.

Reading the steady state as a Boltzmann distribution gives each state an
energy.  The free energy of the evolving distribution then sits above its
equilibrium value by exactly T times the relative information, and both
decay together.
"""
import numpy as np

from relinfo.infodiv import relative_information
from relinfo.markov import (
    energies_from_steady_state,
    free_energy,
    hamiltonian,
    parse_markov,
    propagator,
    steady_states,
)

M = parse_markov("""
states: low mid high
low -> mid : 1.0
mid -> low : 3.0
mid -> high : 0.5
high -> mid : 2.0
""")
H = hamiltonian(M)
(q,) = steady_states(M)
print("steady state:", np.round(q.weights, 6))

for beta in (0.5, 1.0, 4.0):
    model = energies_from_steady_state(q, beta=beta)
    print(f"beta={beta}: energies", np.round(model.energies, 4))

model = energies_from_steady_state(q, beta=1.0)
F_eq = free_energy(q.weights, model)
p0 = np.array([0.0, 0.0, 1.0])

print("\n    t        F(p)      F(q) + T I(p,q)")
for t in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0):
    p = propagator(H, t) @ p0
    rhs = F_eq + model.temperature * relative_information(p, q.weights)
    print(f"{t:5.1f}  {free_energy(p, model):10.6f}  {rhs:10.6f}")
